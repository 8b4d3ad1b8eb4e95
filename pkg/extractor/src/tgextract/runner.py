"""Forward-pass extraction of hidden states, logits, and log-likelihoods.

For each surviving prompt and each requested shuffle level the token ids are
reordered by the externally supplied permutation, pushed through the model
once, and dumped:

- TGEO: every hidden_states entry (embedding layer first, then one per
  transformer block), float32.
- TGLO: final logits row per position, plus the per-token log-likelihood of
  the true next token.  Entry i (i >= 1) is log p(token_i | tokens_<i),
  computed from logits row i-1; entry 0 is 0 since the first token is never
  predicted.

Out-of-memory on a prompt skips that prompt and logs it; token ids outside
the model vocabulary abort the run (tokenizer mismatch).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import torch

from .corpus import iter_prompts
from .dumpio import manifest_entry, write_manifest, write_tgeo, write_tglo
from .job import ExtractionJob
from .shuffler import apply_permutation, permutation_from_cli

log = logging.getLogger("tgextract")


class TokenizerMismatchError(RuntimeError):
    """Token ids fall outside the model's vocabulary."""


@dataclass
class ExtractionResult:
    manifest_path: object = None
    n_prompts: int = 0
    n_dumps: int = 0
    skipped: list = field(default_factory=list)


def load_model(job: ExtractionJob):
    from transformers import AutoModelForCausalLM

    model = AutoModelForCausalLM.from_pretrained(job.model)
    model.to(job.device)
    model.eval()
    return model


def load_tokenizer(job: ExtractionJob):
    from transformers import AutoTokenizer

    return AutoTokenizer.from_pretrained(job.model)


@torch.no_grad()
def forward_dump(model, input_ids: list, device: str):
    """One teacher-forced pass; returns (hidden (L+1, N, d), logits (N, V), loglik (N,))."""
    ids = torch.tensor([input_ids], dtype=torch.long, device=device)
    out = model(input_ids=ids, output_hidden_states=True, use_cache=False)
    hidden = torch.stack([h[0] for h in out.hidden_states])  # (L+1, N, d)
    logits = out.logits[0]  # (N, V)
    logprobs = torch.log_softmax(logits[:-1].float(), dim=-1)
    targets = ids[0, 1:]
    loglik = torch.zeros(ids.shape[1], dtype=torch.float32, device=device)
    loglik[1:] = logprobs.gather(1, targets[:, None])[:, 0]
    # float32 can round log p = -eps to +0.0 but never to a positive value
    loglik = torch.clamp(loglik, max=0.0)
    return (
        hidden.float().cpu().numpy(),
        logits.float().cpu().numpy(),
        loglik.cpu().numpy(),
    )


def _check_vocab(input_ids: list, vocab_size: int) -> None:
    bad = [t for t in input_ids if t < 0 or t >= vocab_size]
    if bad:
        raise TokenizerMismatchError(
            f"token ids outside the model vocabulary (size {vocab_size}): e.g. {bad[:5]}"
        )


def _corpus_has_text_rows(path) -> bool:
    import json

    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                return "input_ids" not in json.loads(line)
    return False


def extract(job: ExtractionJob, model=None, tokenizer=None) -> ExtractionResult:
    """Run the extraction job; returns paths and per-prompt skip records."""
    job.out_dir.mkdir(parents=True, exist_ok=True)
    if model is None:
        model = load_model(job)
    if tokenizer is None and _corpus_has_text_rows(job.dataset):
        tokenizer = load_tokenizer(job)
    vocab_size = int(model.config.vocab_size)

    entries = []
    result = ExtractionResult()
    prompts = list(
        iter_prompts(
            job.dataset,
            job.min_tokens,
            job.truncate,
            tokenizer=tokenizer,
            max_prompts=job.max_prompts,
        )
    )

    for prompt in prompts:
        _check_vocab(prompt.input_ids, vocab_size)
        try:
            dumps = _extract_prompt(job, model, prompt)
        except torch.cuda.OutOfMemoryError as exc:
            log.warning("skipping %s: out of memory (%s)", prompt.prompt_id, exc)
            result.skipped.append({"prompt_id": prompt.prompt_id, "reason": "oom"})
            continue
        except RuntimeError as exc:
            if "out of memory" in str(exc).lower():
                log.warning("skipping %s: out of memory", prompt.prompt_id)
                result.skipped.append({"prompt_id": prompt.prompt_id, "reason": "oom"})
                continue
            raise
        entries.extend(dumps)
        result.n_prompts += 1
        result.n_dumps += len(dumps)

    manifest_path = job.out_dir / "manifest.json"
    write_manifest(manifest_path, entries)
    result.manifest_path = manifest_path
    return result


def _extract_prompt(job: ExtractionJob, model, prompt) -> list:
    entries = []
    n = len(prompt.input_ids)
    for s in job.shuffle_levels:
        perm = permutation_from_cli(n, s, job.seed, prompt.prompt_id)
        ids = apply_permutation(prompt.input_ids, perm)
        hidden, logits, loglik = forward_dump(model, ids, job.device)

        tgeo_name = f"{prompt.prompt_id}_s{s}.tgeo"
        write_tgeo(job.out_dir / tgeo_name, hidden)
        tglo_name = None
        if s == 0 or job.tglo_all_levels:
            tglo_name = f"{prompt.prompt_id}_s{s}.tglo"
            write_tglo(job.out_dir / tglo_name, logits, loglik)
        source = dict(prompt.source)
        source["model"] = job.model
        source["architecture"] = type(model).__name__
        entries.append(manifest_entry(prompt.prompt_id, s, tgeo_name, n, tglo_name, source))
        log.info("dumped %s at S=%d (%d layers, %d tokens)", prompt.prompt_id, s, hidden.shape[0], n)
    return entries
