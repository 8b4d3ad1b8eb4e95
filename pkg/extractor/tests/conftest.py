import json

import numpy as np
import pytest
import torch

VOCAB = 97
N_LAYERS = 2
HIDDEN = 32


@pytest.fixture(scope="session")
def tiny_model():
    """Randomly initialized 2-layer causal LM; no hub access needed."""
    from transformers import GPT2Config, GPT2LMHeadModel

    torch.manual_seed(0)
    config = GPT2Config(
        vocab_size=VOCAB,
        n_positions=256,
        n_embd=HIDDEN,
        n_layer=N_LAYERS,
        n_head=2,
    )
    model = GPT2LMHeadModel(config)
    model.eval()
    return model


@pytest.fixture
def token_corpus(tmp_path):
    """JSONL corpus of pre-tokenized prompts with mixed lengths."""

    def build(n_prompts=3, length=96, short_every=None):
        rng = np.random.default_rng(5)
        path = tmp_path / "corpus.jsonl"
        with open(path, "w") as fh:
            for i in range(n_prompts):
                n = length if short_every is None or i % short_every else length // 2
                ids = rng.integers(0, VOCAB, size=n).tolist()
                fh.write(json.dumps({"id": f"c{i}", "input_ids": ids}) + "\n")
        return path

    return build
