import numpy as np
import pytest

from tokengeom.io import LogitRecord, ManifestEntry, write_layerstack, write_logitrecord, write_manifest
from tokengeom.synthetic import synthetic_layerstack


def fabricate_logits(n_tokens, vocab_size, loss, seed):
    """Logit record whose cross-entropy loss is exactly ``loss`` nats."""
    rng = np.random.default_rng(seed)
    logits = rng.standard_normal((n_tokens, vocab_size))
    loglik = np.full(n_tokens, -loss, dtype=np.float32)
    return LogitRecord(logits=logits, true_next_loglik=loglik)


@pytest.fixture
def synthetic_manifest(tmp_path):
    """Three hypercube stacks (dims 2 then 3) with logit records attached."""

    def build(n_prompts=3, n_tokens=160, dims=(2, 3), with_tglo=True, out=None):
        out = out or tmp_path
        out.mkdir(parents=True, exist_ok=True)
        entries = []
        for i in range(n_prompts):
            pid = f"p{i}"
            stack = synthetic_layerstack(pid, list(dims), ambient_dim=8, n_points=n_tokens, seed=31 * i)
            write_layerstack(stack, out / f"{pid}.tgeo")
            tglo = None
            if with_tglo:
                rec = fabricate_logits(n_tokens, 24, loss=0.5 + 0.3 * i, seed=i)
                write_logitrecord(rec, out / f"{pid}.tglo")
                tglo = f"{pid}.tglo"
            entries.append(ManifestEntry(prompt_id=pid, tgeo=f"{pid}.tgeo", n_tokens=n_tokens, s=0, tglo=tglo))
        manifest = out / "manifest.json"
        write_manifest(entries, manifest)
        return manifest

    return build
