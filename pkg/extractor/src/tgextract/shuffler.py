"""Token-order permutations obtained from the analysis toolkit's shuffle CLI.

The shuffling contract lives in the `tokengeom` command line: given a JSON
array of token indices and a shuffle level S, it returns the block-permuted
index order.  Keeping the permutation source external guarantees the
extractor applies exactly the same reordering the analysis side defines.
"""

from __future__ import annotations

import json
import subprocess
import sys


class ShuffleCommandError(RuntimeError):
    pass


def permutation_from_cli(n_tokens: int, s: int, seed: int, prompt_id: str) -> list:
    """Index permutation of range(n_tokens) at shuffle level s."""
    if s == 0:
        return list(range(n_tokens))
    cmd = [
        sys.executable,
        "-m",
        "tokengeom.cli",
        "shuffle",
        "--s",
        str(s),
        "--seed",
        str(seed),
        "--prompt-id",
        prompt_id,
    ]
    proc = subprocess.run(
        cmd,
        input=json.dumps(list(range(n_tokens))),
        capture_output=True,
        text=True,
    )
    if proc.returncode != 0:
        raise ShuffleCommandError(f"shuffle CLI failed ({proc.returncode}): {proc.stderr.strip()}")
    perm = json.loads(proc.stdout)
    if sorted(perm) != list(range(n_tokens)):
        raise ShuffleCommandError("shuffle CLI did not return a permutation")
    return perm


def apply_permutation(items: list, perm: list) -> list:
    return [items[j] for j in perm]


def invert_permutation(perm: list) -> list:
    inverse = [0] * len(perm)
    for pos, j in enumerate(perm):
        inverse[j] = pos
    return inverse
