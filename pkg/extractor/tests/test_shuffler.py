from tgextract.shuffler import apply_permutation, invert_permutation, permutation_from_cli


def test_s0_is_identity():
    assert permutation_from_cli(10, 0, seed=3, prompt_id="p") == list(range(10))


def test_cli_returns_block_permutation():
    perm = permutation_from_cli(16, 1, seed=9, prompt_id="p0")
    assert sorted(perm) == list(range(16))
    # level 1 moves whole blocks of four: each aligned chunk is contiguous
    chunks = {tuple(perm[i : i + 4]) for i in range(0, 16, 4)}
    assert chunks == {tuple(range(i, i + 4)) for i in range(0, 16, 4)}


def test_cli_deterministic_per_prompt():
    a = permutation_from_cli(64, 2, seed=5, prompt_id="pA")
    b = permutation_from_cli(64, 2, seed=5, prompt_id="pA")
    c = permutation_from_cli(64, 2, seed=5, prompt_id="pB")
    assert a == b
    assert a != c


def test_permute_then_unpermute_roundtrip():
    items = [f"tok{i}" for i in range(64)]
    perm = permutation_from_cli(64, 2, seed=11, prompt_id="p")
    shuffled = apply_permutation(items, perm)
    restored = apply_permutation(shuffled, invert_permutation(perm))
    assert restored == items
    assert shuffled != items
