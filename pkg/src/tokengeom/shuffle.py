"""Seeded block shuffling of token sequences.

A sequence of n tokens is split into 4^s consecutive blocks of size
ceil(n / 4^s) (the last block may be shorter) and the blocks are rearranged
by one uniformly random permutation; order inside each block is preserved.
s = 0 keeps the sequence intact; at the full-shuffle index (4^s == n) every
token moves independently.

Randomness comes from numpy's PCG64 generator, whose permutation routine is
a Fisher-Yates pass; per-prompt streams are derived by hashing the prompt id
into the seed sequence so dataset-level runs stay reproducible.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ShuffleSpec:
    s: int
    seed: int

    def __post_init__(self):
        if self.s < 0:
            raise ValueError("shuffle index must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def prompt_seed(seed: int, prompt_id: str) -> int:
    """Stable per-prompt sub-seed for dataset-level reproducibility."""
    digest = hashlib.blake2b(prompt_id.encode("utf-8"), digest_size=8).digest()
    sub = int.from_bytes(digest, "little")
    mixed = np.random.SeedSequence([seed, sub]).generate_state(1, dtype=np.uint64)
    return int(mixed[0])


def block_permutation(n_blocks: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.permutation(n_blocks)


def shuffle_tokens(tokens, spec: ShuffleSpec) -> list:
    """Block-shuffle a token sequence; deterministic under a fixed seed.

    Items are opaque: token ids, indices, anything.  Returns a new list that
    is a permutation of the input multiset.
    """
    items = list(tokens)
    n = len(items)
    if n == 0:
        raise ValueError("token sequence is empty")
    n_blocks = 4**spec.s
    if n_blocks > n:
        raise ValueError(f"4^{spec.s} = {n_blocks} blocks exceed the {n} tokens")
    if spec.s == 0:
        return items
    block_size = -(-n // n_blocks)  # ceil
    blocks = [items[i * block_size : (i + 1) * block_size] for i in range(n_blocks)]
    order = block_permutation(n_blocks, spec.seed)
    out: list = []
    for b in order:
        out.extend(blocks[b])
    return out


def full_shuffle_index(n: int) -> int:
    """Largest s with 4^s <= n; equals log4(n) when n is a power of four."""
    if n < 1:
        raise ValueError("n must be positive")
    s = 0
    while 4 ** (s + 1) <= n:
        s += 1
    return s
