"""Acceptance gate: one test per release criterion, each printing a verdict line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines.  Stated tolerances and runtime budgets are asserted, not advisory.
"""

import json
import time
from contextlib import contextmanager

import numpy as np
import pytest
from scipy import integrate, stats

from tokengeom.correlation import layerwise_correlation, pearson, permutation_pvalue
from tokengeom.entropy import (
    dirichlet_expected_entropy,
    dirichlet_mc_entropy,
    softmax_entropy,
    unit_box_expected_entropy,
)
from tokengeom.entropy import contextual_entropy_report
from tokengeom.id_estimators import gride, ratio_density, twonn
from tokengeom.io import LogitRecord, ManifestEntry, write_layerstack, write_manifest
from tokengeom.neighbors import knn, mu_ratios
from tokengeom.overlap import neighborhood_overlap
from tokengeom.pipeline import RunConfig, analyze
from tokengeom.shuffle import ShuffleSpec, full_shuffle_index, shuffle_tokens
from tokengeom.synthetic import SyntheticSpec, generate_synthetic, synthetic_layerstack

EULER_GAMMA = 0.5772156649015328606


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name}", flush=True)
        raise
    print(f"[PASS] {name}", flush=True)


def test_id_recovery_oracle():
    with criterion("id-recovery: TwoNN d in {2,3,5} within 10%, d=9 within 25%; GRIDE within 20%; < 30 s"):
        t0 = time.perf_counter()
        graphs = {}
        for d in (2, 3, 5, 9):
            graphs[d] = []
            for seed in range(20):
                cloud = generate_synthetic(SyntheticSpec("hypercube", d, d, 1024, seed))
                graphs[d].append(knn(cloud, 8))

        for d, tol in [(2, 0.10), (3, 0.10), (5, 0.10), (9, 0.25)]:
            med = np.median([twonn(mu_ratios(g, 1, 2)).d_hat for g in graphs[d]])
            assert abs(med - d) / d < tol, f"twonn d={d}: median {med}"

        for d in (3, 5):
            for s in (2, 4, 8):
                med = np.median([gride(mu_ratios(g, s // 2, s)).d_hat for g in graphs[d]])
                assert abs(med - d) / d < 0.20, f"gride d={d} scaling={s}: median {med}"
        elapsed = time.perf_counter() - t0
        assert elapsed < 30.0, f"took {elapsed:.1f} s"


def test_twonn_gride_consistency():
    with criterion("twonn/gride consistency: d_gride(1,2) = d_twonn * n/(n-1) to 1e-10 on 100 clouds"):
        rng = np.random.default_rng(2024)
        for i in range(100):
            n = int(rng.integers(16, 160))
            dim = int(rng.integers(2, 12))
            kind = ("gaussian", "hypercube")[i % 2]
            cloud = generate_synthetic(SyntheticSpec(kind, dim, dim, n, int(rng.integers(0, 2**32))))
            ratios = mu_ratios(knn(cloud, 2), 1, 2)
            t = twonn(ratios)
            g = gride(ratios)
            expected = t.d_hat * t.n_used / (t.n_used - 1)
            assert abs(g.d_hat - expected) / expected < 1e-10


def test_ratio_density_normalization():
    with criterion("ratio density integrates to 1 within 1e-6 at (1,1,2), (2,2,4), (3,4,8)"):
        for d, n1, n2 in [(1, 1, 2), (2, 2, 4), (3, 4, 8)]:
            val, _ = integrate.quad(
                lambda m: ratio_density(np.array([m]), d, n1, n2)[0], 1.0, np.inf, limit=200
            )
            assert abs(val - 1.0) < 1e-6, f"(d,n1,n2)=({d},{n1},{n2}): {val}"


def test_shuffle_contract():
    with criterion("shuffle: S=0 identity, multiset + block order preserved, chi2 uniform at p > 0.001; < 10 s"):
        t0 = time.perf_counter()
        tokens = list(range(1024))
        for seed in (0, 7, 123456789):
            assert shuffle_tokens(tokens, ShuffleSpec(s=0, seed=seed)) == tokens

        assert full_shuffle_index(1024) == 5
        for s in (1, 3, 5):
            out = shuffle_tokens(tokens, ShuffleSpec(s=s, seed=99))
            assert sorted(out) == tokens
            n_blocks = 4**s
            size = 1024 // n_blocks
            seen_last = {}
            for tok in out:
                block = tok // size
                if block in seen_last:
                    assert tok > seen_last[block], "within-block order broken"
                seen_last[block] = tok

        n = 16
        counts = np.zeros(n, dtype=int)
        for seed in range(10_000):
            counts[shuffle_tokens(list(range(n)), ShuffleSpec(s=2, seed=seed))[0]] += 1
        _, p = stats.chisquare(counts)
        assert p > 0.001, f"first-position chi-squared p={p}"
        elapsed = time.perf_counter() - t0
        assert elapsed < 10.0, f"took {elapsed:.1f} s"


def test_neighborhood_overlap_criteria():
    with criterion("overlap: self-overlap 1, hand example 0.5, random null < 0.01 over 10 trials"):
        rng = np.random.default_rng(5)
        cloud = rng.standard_normal((64, 4))
        g = knn(cloud, 2)
        assert neighborhood_overlap(g, g, 2) == 1.0

        from tokengeom.neighbors import NeighborGraph

        def graph_of(index_rows):
            idx = np.asarray(index_rows, dtype=np.int64)
            dist = np.tile(np.arange(1.0, idx.shape[1] + 1), (idx.shape[0], 1))
            return NeighborGraph(k=idx.shape[1], indices=idx, distances=dist, ambient_dim=2)

        gl = graph_of([[1], [0], [3], [2]])
        gm = graph_of([[1], [2], [1], [2]])
        assert neighborhood_overlap(gl, gm, 1) == 0.5

        for trial in range(10):
            a = rng.standard_normal((1024, 8))
            b = rng.standard_normal((1024, 8))
            chi = neighborhood_overlap(knn(a, 2), knn(b, 2), 2)
            assert chi < 0.01, f"trial {trial}: chi={chi}"


def test_entropy_bridge_criteria():
    with criterion(
        "entropy: uniform=log V @1e-12, shift inv @1e-10, mean identity @1e-12, "
        "unit-box within 0.1 of log D, Dirichlet MC within 3 SE, harmonic bounds to 1e6, "
        "asymptotic gap < 1e-3; < 60 s"
    ):
        t0 = time.perf_counter()

        for v in (2, 10, 1000, 50000):
            assert abs(softmax_entropy(np.zeros(v)) - np.log(v)) < 1e-12

        rng = np.random.default_rng(0)
        z = rng.standard_normal(200)
        base = softmax_entropy(z)
        for c in (-100.0, -1.0, 1.0, 100.0):
            assert abs(softmax_entropy(z + c) - base) < 1e-10

        rec = LogitRecord(
            logits=rng.standard_normal((64, 40)).astype(np.float32),
            true_next_loglik=-rng.uniform(0, 3, 64).astype(np.float32),
        )
        rep = contextual_entropy_report(rec)
        assert abs(rep.avg_contextual_entropy - float(np.mean(rep.per_token_softmax_entropy))) < 1e-12

        for d in (4, 16, 64, 256):
            res = unit_box_expected_entropy(d, 100_000, seed=d)
            assert abs(res.expected_entropy - np.log(d)) <= 0.1, f"unit box D={d}: {res.expected_entropy}"

        for d in (2, 10, 1000):
            res = dirichlet_mc_entropy(d, 100_000, seed=d)
            assert abs(res.expected_entropy - res.reference) <= 3 * res.std_error, f"D={d}"
        res1000 = dirichlet_mc_entropy(1000, 100_000, seed=1000)
        assert abs(res1000.expected_entropy - np.log(1000)) < 0.5  # harmonic-number bound

        # bounds for every D up to 1e6 via one cumulative pass
        d_all = np.arange(1, 1_000_001)
        h_minus_1 = np.cumsum(1.0 / d_all) - 1.0
        log_d = np.log(d_all)
        assert (h_minus_1 <= log_d).all()
        assert (log_d - 0.5 < h_minus_1).all()
        spot = np.random.default_rng(1).integers(1, 1_000_001, size=200)
        for d in spot:
            assert h_minus_1[d - 1] == pytest.approx(dirichlet_expected_entropy(int(d)), rel=1e-12)

        gap = abs(dirichlet_expected_entropy(100_000) - (np.log(100_000) + EULER_GAMMA - 1))
        assert gap < 1e-3

        elapsed = time.perf_counter() - t0
        assert elapsed < 60.0, f"took {elapsed:.1f} s"


def test_correlation_machinery():
    with criterion("correlation: hand Pearson @1e-5, perm vs t within 0.02, log-linear population rho=1"):
        rho, _ = pearson([1.0, 2.0, 3.0], [1.0, 2.0, 4.0])
        assert abs(rho - 0.98198) < 1e-5

        diffs = []
        for seed in range(5):
            rng = np.random.default_rng(300 + seed)
            x = rng.standard_normal(100)
            y = rng.standard_normal(100)
            _, p_t = pearson(x, y)
            p_perm = permutation_pvalue(x, y, n_shuffles=10_000, seed=seed)
            diffs.append(abs(p_t - p_perm))
        assert max(diffs) < 0.02, f"max |t-p - perm-p| = {max(diffs)}"

        rng = np.random.default_rng(0)
        loss = rng.uniform(0.5, 3.0, 50)
        ids = np.exp(np.outer(loss, np.linspace(0.5, 2.0, 6)))
        report = layerwise_correlation(ids, loss)
        assert len(report.per_layer) == 6
        for row in report.per_layer:
            assert row.pearson == pytest.approx(1.0, abs=1e-10), f"layer {row.layer}"


def test_pipeline_determinism_and_hump(tmp_path):
    with criterion("pipeline: byte-identical reruns; latent 2-5-2 fixture peaks at the middle layer"):
        stack = synthetic_layerstack("hump", [2, 5, 2], ambient_dim=16, n_points=1024, seed=11)
        write_layerstack(stack, tmp_path / "hump.tgeo")
        write_manifest([ManifestEntry("hump", "hump.tgeo", 1024)], tmp_path / "manifest.json")

        outputs = []
        for label in ("a", "b"):
            out = tmp_path / label
            config = RunConfig(
                manifest=tmp_path / "manifest.json",
                out_dir=out,
                metrics=("id", "no", "cosine", "angles"),
                scalings=(2, 4, 8),
                knn_k=2,
            )
            analyze(config)
            outputs.append(
                {p.relative_to(out): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}
            )
        assert outputs[0] == outputs[1], "reruns differ"

        doc = json.loads((tmp_path / "a" / "profiles" / "hump_s0.json").read_text())
        ids = [row["id"]["2"]["d_hat"] for row in doc["per_layer"]]
        assert ids[1] > ids[0] and ids[1] > ids[2], f"profile {ids} lacks a middle peak"
