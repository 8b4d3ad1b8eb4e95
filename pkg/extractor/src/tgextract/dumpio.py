"""Writers for the TGEO/TGLO binary formats and the prompt manifest.

These formats are the interface contract with the analysis toolkit:

TGEO  "TGEO" | version u32=1 | n_layers u32 | n_tokens u32 | dim u32 |
      float32 payload, layer-major, row-major, little-endian.
TGLO  "TGLO" | version u32=1 | n_tokens u32 | vocab_size u32 |
      logits float32 | true-next-token log-likelihoods float32.

The manifest is a JSON document {"schema_version": 1, "prompts": [...]}
with per-prompt entries {prompt_id, s, tgeo, tglo, n_tokens, source} and
paths relative to the manifest file.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

_TGEO_HEADER = struct.Struct("<4sIIII")
_TGLO_HEADER = struct.Struct("<4sIII")
FORMAT_VERSION = 1


def write_tgeo(path, layers: np.ndarray) -> None:
    """Write a (n_layers, n_tokens, dim) float array as a TGEO dump."""
    arr = np.ascontiguousarray(layers, dtype="<f4")
    if arr.ndim != 3:
        raise ValueError(f"expected (n_layers, n_tokens, dim), got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("hidden states contain non-finite values")
    n_layers, n_tokens, dim = arr.shape
    with open(path, "wb") as fh:
        fh.write(_TGEO_HEADER.pack(b"TGEO", FORMAT_VERSION, n_layers, n_tokens, dim))
        fh.write(arr.tobytes())


def write_tglo(path, logits: np.ndarray, true_next_loglik: np.ndarray) -> None:
    logits = np.ascontiguousarray(logits, dtype="<f4")
    loglik = np.ascontiguousarray(true_next_loglik, dtype="<f4")
    if logits.ndim != 2 or loglik.shape != (logits.shape[0],):
        raise ValueError("logits must be (n_tokens, vocab); loglik must match rows")
    if not (np.isfinite(logits).all() and np.isfinite(loglik).all()):
        raise ValueError("non-finite values in logit record")
    if (loglik > 0).any():
        raise ValueError("log-likelihoods must be <= 0")
    n_tokens, vocab = logits.shape
    with open(path, "wb") as fh:
        fh.write(_TGLO_HEADER.pack(b"TGLO", FORMAT_VERSION, n_tokens, vocab))
        fh.write(logits.tobytes())
        fh.write(loglik.tobytes())


def write_manifest(path, entries: list[dict]) -> None:
    doc = {"schema_version": 1, "prompts": entries}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def manifest_entry(prompt_id: str, s: int, tgeo: str, n_tokens: int, tglo: str | None = None, source: dict | None = None) -> dict:
    return {
        "prompt_id": prompt_id,
        "s": s,
        "tgeo": tgeo,
        "tglo": tglo,
        "n_tokens": n_tokens,
        "source": source or {},
    }
