from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tokengeom.shuffle import ShuffleSpec, full_shuffle_index, prompt_seed, shuffle_tokens


def test_s0_is_identity():
    tokens = list(range(16))
    for seed in (0, 1, 999):
        assert shuffle_tokens(tokens, ShuffleSpec(s=0, seed=seed)) == tokens


def test_full_shuffle_is_per_token_permutation():
    tokens = list(range(16))
    out = shuffle_tokens(tokens, ShuffleSpec(s=2, seed=3))
    assert sorted(out) == tokens
    assert out != tokens  # overwhelmingly likely for 16!, pinned by the seed


def test_s1_preserves_blocks_of_four():
    tokens = list(range(16))
    out = shuffle_tokens(tokens, ShuffleSpec(s=1, seed=7))
    chunks = [tuple(out[i : i + 4]) for i in range(0, 16, 4)]
    original = {tuple(range(i, i + 4)) for i in range(0, 16, 4)}
    assert set(chunks) == original  # whole blocks move, insides stay ordered


def test_short_last_block():
    tokens = list(range(10))
    out = shuffle_tokens(tokens, ShuffleSpec(s=1, seed=0))
    assert sorted(out) == tokens
    # blocks are [0..2], [3..5], [6..8], [9]; each must appear contiguously
    joined = ",".join(map(str, out))
    for block in ("0,1,2", "3,4,5", "6,7,8"):
        assert block in joined


def test_determinism_and_seed_sensitivity():
    tokens = list(range(64))
    a = shuffle_tokens(tokens, ShuffleSpec(s=2, seed=5))
    b = shuffle_tokens(tokens, ShuffleSpec(s=2, seed=5))
    c = shuffle_tokens(tokens, ShuffleSpec(s=2, seed=6))
    assert a == b
    assert a != c


def test_too_many_blocks_rejected():
    with pytest.raises(ValueError):
        shuffle_tokens(list(range(10)), ShuffleSpec(s=2, seed=0))
    with pytest.raises(ValueError):
        shuffle_tokens([], ShuffleSpec(s=0, seed=0))


def test_spec_validation():
    with pytest.raises(ValueError):
        ShuffleSpec(s=-1, seed=0)
    with pytest.raises(ValueError):
        ShuffleSpec(s=0, seed=2**64)


def test_full_shuffle_index_values():
    assert full_shuffle_index(1024) == 5
    assert full_shuffle_index(16) == 2
    assert full_shuffle_index(1) == 0
    assert full_shuffle_index(15) == 1
    assert full_shuffle_index(4095) == 5
    with pytest.raises(ValueError):
        full_shuffle_index(0)


def test_all_permutations_reachable_at_full_shuffle():
    # n = 4 tokens at S = 1 is the full shuffle: 4 blocks of one token each;
    # every one of the 4! = 24 orders must occur across seeds
    seen = set()
    for seed in range(2000):
        seen.add(tuple(shuffle_tokens([0, 1, 2, 3], ShuffleSpec(s=1, seed=seed))))
        if len(seen) == 24:
            break
    assert len(seen) == 24


def test_prompt_seed_stable_and_distinct():
    assert prompt_seed(42, "promptA") == prompt_seed(42, "promptA")
    assert prompt_seed(42, "promptA") != prompt_seed(42, "promptB")
    assert prompt_seed(42, "promptA") != prompt_seed(43, "promptA")


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(min_value=1, max_value=200),
    s=st.integers(min_value=0, max_value=3),
    seed=st.integers(min_value=0, max_value=2**64 - 1),
)
def test_multiset_preserved_property(n, s, seed):
    if 4**s > n:
        s = full_shuffle_index(n)
    tokens = [f"t{i % 7}" for i in range(n)]
    out = shuffle_tokens(tokens, ShuffleSpec(s=s, seed=seed))
    assert Counter(out) == Counter(tokens)


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(min_value=4, max_value=300),
    s=st.integers(min_value=1, max_value=4),
    seed=st.integers(min_value=0, max_value=2**64 - 1),
)
def test_within_block_order_preserved_property(n, s, seed):
    if 4**s > n:
        s = max(1, full_shuffle_index(n))
    tokens = list(range(n))
    out = shuffle_tokens(tokens, ShuffleSpec(s=s, seed=seed))
    n_blocks = 4**s
    size = -(-n // n_blocks)
    block_of = {tok: tok // size for tok in tokens}
    # scan the output; consecutive tokens of the same block must ascend
    last_seen: dict = {}
    for tok in out:
        b = block_of[tok]
        if b in last_seen:
            assert tok > last_seen[b]
        last_seen[b] = tok
