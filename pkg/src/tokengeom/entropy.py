"""Cross-entropy, softmax entropy, and toy models tying entropy to dimension.

All entropies are in nats.  The softmax entropy of a logit vector z is

    S(z) = log sum_a exp(z_a) - sum_a z_a exp(z_a) / sum_a exp(z_a),

computed after subtracting max(z) so huge logits cannot overflow.  Masked
vocabulary entries use a -inf sentinel and contribute zero weight.

Two toy models give the expected entropy when only D vocabulary entries are
active: logits uniform on the unit box [0,1]^D (Monte Carlo; the expectation
tracks log D), and next-token probabilities uniform on the D-simplex, whose
expectation is the harmonic number H_D minus one, squeezed between
log D - 1/2 and log D and approaching log D + gamma - 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .io import LogitRecord

_MC_CHUNK = 1 << 16  # draws per chunk, keeps slabs small and sums order-fixed


def _chunk_rows(width: int) -> int:
    """Rows per Monte Carlo chunk so the working slab stays a few MB."""
    return max(1, _MC_CHUNK // max(1, width // 16))


@dataclass(frozen=True)
class EntropyReport:
    avg_cross_entropy: float
    avg_contextual_entropy: float
    per_token_softmax_entropy: np.ndarray


@dataclass(frozen=True)
class ToyResult:
    d_m: int
    expected_entropy: float
    reference: float
    n_samples: int
    std_error: float


def avg_cross_entropy(rec: LogitRecord) -> float:
    """Mean negative log-likelihood of the true next tokens, nats."""
    if rec.n_tokens == 0:
        raise ValueError("empty record")
    return float(-np.mean(rec.true_next_loglik, dtype=np.float64))


def softmax_entropy(z) -> float:
    """Entropy of softmax(z); -inf entries are masked out, +inf/nan rejected."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1 or z.size == 0:
        raise ValueError("z must be a nonempty 1-d vector")
    if np.isnan(z).any() or (z == np.inf).any():
        raise ValueError("logits must be finite (only -inf sentinels allowed)")
    if (z == -np.inf).all():
        raise ValueError("all entries are masked")
    return float(_softmax_entropy_rows(z[None, :])[0])


def _softmax_entropy_rows(z: np.ndarray) -> np.ndarray:
    """Row-wise softmax entropy for a (rows, width) float64 matrix."""
    shifted = z - z.max(axis=1, keepdims=True)
    w = np.exp(shifted)
    total = w.sum(axis=1)
    # z * exp(z) with masked entries (-inf * 0) forced to zero
    zw = np.where(w == 0.0, 0.0, shifted) * w
    return np.log(total) - zw.sum(axis=1) / total


def contextual_entropy_report(rec: LogitRecord) -> EntropyReport:
    """Per-token softmax entropies plus their mean and the cross-entropy loss.

    The average contextual entropy is by definition the arithmetic mean of
    the per-token softmax entropies; both come out of the same pass here.
    """
    logits = rec.logits.astype(np.float64)
    per_token = _softmax_entropy_rows(logits)
    return EntropyReport(
        avg_cross_entropy=avg_cross_entropy(rec),
        avg_contextual_entropy=float(np.mean(per_token)),
        per_token_softmax_entropy=per_token,
    )


def _mc_mean(sampler, n_samples: int, chunk: int = _MC_CHUNK) -> tuple[float, float]:
    """Chunked Monte Carlo mean with a deterministic, order-fixed reduction."""
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        values = sampler(m)
        total += float(values.sum())
        total_sq += float((values * values).sum())
        done += m
    mean = total / n_samples
    var = max(total_sq / n_samples - mean * mean, 0.0)
    std_error = (var / n_samples) ** 0.5
    return mean, std_error


def unit_box_expected_entropy(d_m: int, n_samples: int, seed: int) -> ToyResult:
    """Expected softmax entropy of logits uniform on [0,1]^d_m, by Monte Carlo.

    The reference value is log(d_m): with only d_m active entries the
    expected entropy tracks the log of the box dimension.
    """
    if d_m < 1:
        raise ValueError("d_m must be positive")
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    if d_m == 1:
        # a single active entry always has probability 1
        return ToyResult(d_m=1, expected_entropy=0.0, reference=0.0, n_samples=n_samples, std_error=0.0)
    rng = np.random.default_rng(seed)

    def sampler(m: int) -> np.ndarray:
        z = rng.uniform(0.0, 1.0, size=(m, d_m))
        return _softmax_entropy_rows(z)

    mean, std_error = _mc_mean(sampler, n_samples, chunk=_chunk_rows(d_m))
    return ToyResult(
        d_m=d_m,
        expected_entropy=mean,
        reference=float(np.log(d_m)),
        n_samples=n_samples,
        std_error=std_error,
    )


def harmonic_number(n: int) -> float:
    if n < 0:
        raise ValueError("n must be non-negative")
    return float(np.sum(1.0 / np.arange(1, n + 1)))


def dirichlet_expected_entropy(d_m: int) -> float:
    """Expected entropy of a uniform draw from the d_m-simplex: H_{d_m} - 1.

    Equal to digamma(d_m + 1) - digamma(2); evaluated as the exact harmonic
    sum since only integer arguments occur.
    """
    if d_m < 1:
        raise ValueError("d_m must be positive")
    return harmonic_number(d_m) - 1.0


def dirichlet_mc_entropy(d_m: int, n_samples: int, seed: int) -> ToyResult:
    """Monte Carlo mean entropy of points uniform on the d_m-simplex.

    Sampling uses the normalized-exponentials construction.  The reference
    is the closed form H_{d_m} - 1.
    """
    if d_m < 1:
        raise ValueError("d_m must be positive")
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    reference = dirichlet_expected_entropy(d_m)
    if d_m == 1:
        return ToyResult(d_m=1, expected_entropy=0.0, reference=reference, n_samples=n_samples, std_error=0.0)
    rng = np.random.default_rng(seed)

    def sampler(m: int) -> np.ndarray:
        e = rng.exponential(size=(m, d_m))
        p = e / e.sum(axis=1, keepdims=True)
        plogp = np.where(p > 0.0, p * np.log(np.where(p > 0.0, p, 1.0)), 0.0)
        return -plogp.sum(axis=1)

    mean, std_error = _mc_mean(sampler, n_samples, chunk=_chunk_rows(d_m))
    return ToyResult(
        d_m=d_m,
        expected_entropy=mean,
        reference=reference,
        n_samples=n_samples,
        std_error=std_error,
    )
