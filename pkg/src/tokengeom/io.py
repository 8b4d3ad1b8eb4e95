"""Binary dump formats and in-memory data model for layerwise token representations.

Two little-endian binary formats are defined:

TGEO  magic "TGEO" | version u32 | n_layers u32 | n_tokens u32 | dim u32 |
      payload: n_layers * n_tokens * dim float32, layer-major, row-major.

TGLO  magic "TGLO" | version u32 | n_tokens u32 | vocab_size u32 |
      logits payload float32 | true-next-token log-likelihoods float32.

Payloads are float32 on disk; downstream geometry promotes to float64.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TGEO_MAGIC = b"TGEO"
TGLO_MAGIC = b"TGLO"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sIIII")  # magic, version, three shape fields
_TGLO_HEADER = struct.Struct("<4sIII")


class DumpError(Exception):
    """Base class for binary dump failures."""


class DumpHeaderError(DumpError):
    """Magic, version, or shape fields are malformed."""


class DumpPayloadError(DumpError):
    """Payload length disagrees with the header."""


class DumpValueError(DumpError):
    """Payload contains non-finite values."""


@dataclass(frozen=True)
class LayerStack:
    """Ordered per-layer point clouds for one prompt.

    ``layers`` has shape (n_layers, n_tokens, dim), float32.  Index 0 is the
    embedding layer; hidden layers follow in order.
    """

    prompt_id: str
    layers: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.layers, dtype=np.float32)
        if arr.ndim != 3:
            raise ValueError(f"layers must be 3-d (n_layers, n_tokens, dim), got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise ValueError("stack must contain at least one layer")
        if arr.shape[1] < 2:
            raise ValueError("each layer needs at least 2 tokens")
        if arr.shape[2] < 1:
            raise ValueError("dim must be positive")
        if not np.isfinite(arr).all():
            raise ValueError("layer payload contains non-finite values")
        object.__setattr__(self, "layers", arr)

    @property
    def n_layers(self) -> int:
        return self.layers.shape[0]

    @property
    def n_tokens(self) -> int:
        return self.layers.shape[1]

    @property
    def dim(self) -> int:
        return self.layers.shape[2]

    def layer(self, idx: int) -> np.ndarray:
        """Point cloud (n_tokens, dim) at layer ``idx``."""
        return self.layers[idx]


@dataclass(frozen=True)
class LogitRecord:
    """Final-layer logits plus per-token true-next-token log-likelihoods (nats)."""

    logits: np.ndarray
    true_next_loglik: np.ndarray

    def __post_init__(self):
        logits = np.ascontiguousarray(self.logits, dtype=np.float32)
        loglik = np.ascontiguousarray(self.true_next_loglik, dtype=np.float32)
        if logits.ndim != 2:
            raise ValueError(f"logits must be 2-d (n_tokens, vocab_size), got shape {logits.shape}")
        if loglik.ndim != 1 or loglik.shape[0] != logits.shape[0]:
            raise ValueError("true_next_loglik length must match the logits row count")
        if not np.isfinite(logits).all():
            raise ValueError("logits contain non-finite values")
        if not np.isfinite(loglik).all():
            raise ValueError("log-likelihoods contain non-finite values")
        if (loglik > 0).any():
            raise ValueError("log-likelihoods must be <= 0")
        object.__setattr__(self, "logits", logits)
        object.__setattr__(self, "true_next_loglik", loglik)

    @property
    def n_tokens(self) -> int:
        return self.logits.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.logits.shape[1]


def write_layerstack(stack: LayerStack, path) -> None:
    """Serialize a LayerStack; read_layerstack inverts this bit-exactly."""
    path = Path(path)
    header = _HEADER.pack(TGEO_MAGIC, FORMAT_VERSION, stack.n_layers, stack.n_tokens, stack.dim)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(stack.layers.astype("<f4", copy=False).tobytes())


def read_layerstack(path, prompt_id: str | None = None) -> LayerStack:
    """Read a TGEO dump.

    Raises DumpHeaderError / DumpPayloadError / DumpValueError for, in order,
    malformed headers, truncated or oversized payloads, and non-finite data.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise DumpHeaderError(f"{path}: file shorter than the TGEO header")
    magic, version, n_layers, n_tokens, dim = _HEADER.unpack_from(raw)
    if magic != TGEO_MAGIC:
        raise DumpHeaderError(f"{path}: bad magic {magic!r}, expected {TGEO_MAGIC!r}")
    if version != FORMAT_VERSION:
        raise DumpHeaderError(f"{path}: unsupported version {version}")
    if n_layers < 1 or n_tokens < 2 or dim < 1:
        raise DumpHeaderError(f"{path}: invalid shape ({n_layers}, {n_tokens}, {dim})")
    expected = n_layers * n_tokens * dim * 4
    payload = raw[_HEADER.size:]
    if len(payload) != expected:
        raise DumpPayloadError(f"{path}: payload is {len(payload)} bytes, header implies {expected}")
    arr = np.frombuffer(payload, dtype="<f4").reshape(n_layers, n_tokens, dim)
    if not np.isfinite(arr).all():
        raise DumpValueError(f"{path}: payload contains non-finite values")
    return LayerStack(prompt_id=prompt_id if prompt_id is not None else path.stem, layers=arr)


def write_logitrecord(rec: LogitRecord, path) -> None:
    path = Path(path)
    header = _TGLO_HEADER.pack(TGLO_MAGIC, FORMAT_VERSION, rec.n_tokens, rec.vocab_size)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(rec.logits.astype("<f4", copy=False).tobytes())
        fh.write(rec.true_next_loglik.astype("<f4", copy=False).tobytes())


def read_logitrecord(path) -> LogitRecord:
    path = Path(path)
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _TGLO_HEADER.size:
        raise DumpHeaderError(f"{path}: file shorter than the TGLO header")
    magic, version, n_tokens, vocab_size = _TGLO_HEADER.unpack_from(raw)
    if magic != TGLO_MAGIC:
        raise DumpHeaderError(f"{path}: bad magic {magic!r}, expected {TGLO_MAGIC!r}")
    if version != FORMAT_VERSION:
        raise DumpHeaderError(f"{path}: unsupported version {version}")
    if n_tokens < 1 or vocab_size < 1:
        raise DumpHeaderError(f"{path}: invalid shape ({n_tokens}, {vocab_size})")
    expected = (n_tokens * vocab_size + n_tokens) * 4
    payload = raw[_TGLO_HEADER.size:]
    if len(payload) != expected:
        raise DumpPayloadError(f"{path}: payload is {len(payload)} bytes, header implies {expected}")
    split = n_tokens * vocab_size * 4
    logits = np.frombuffer(payload[:split], dtype="<f4").reshape(n_tokens, vocab_size)
    loglik = np.frombuffer(payload[split:], dtype="<f4")
    if not np.isfinite(logits).all() or not np.isfinite(loglik).all():
        raise DumpValueError(f"{path}: payload contains non-finite values")
    return LogitRecord(logits=logits, true_next_loglik=loglik)


@dataclass
class ManifestEntry:
    """One prompt dump: paths are stored relative to the manifest file."""

    prompt_id: str
    tgeo: str
    n_tokens: int
    s: int = 0  # shuffle index label; 0 = structured
    tglo: str | None = None
    source: dict = field(default_factory=dict)


def write_manifest(entries: list[ManifestEntry], path) -> None:
    path = Path(path)
    doc = {
        "schema_version": 1,
        "prompts": [
            {
                "prompt_id": e.prompt_id,
                "s": e.s,
                "tgeo": e.tgeo,
                "tglo": e.tglo,
                "n_tokens": e.n_tokens,
                "source": e.source,
            }
            for e in entries
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path) -> list[ManifestEntry]:
    path = Path(path)
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or "prompts" not in doc:
        raise ValueError(f"{path}: not a manifest (missing 'prompts')")
    entries = []
    for item in doc["prompts"]:
        entries.append(
            ManifestEntry(
                prompt_id=str(item["prompt_id"]),
                tgeo=str(item["tgeo"]),
                n_tokens=int(item["n_tokens"]),
                s=int(item.get("s", 0)),
                tglo=item.get("tglo"),
                source=dict(item.get("source", {})),
            )
        )
    return entries
