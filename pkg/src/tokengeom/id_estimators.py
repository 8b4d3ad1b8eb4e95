"""Intrinsic-dimension estimation from neighbor-distance ratios.

Two estimators over the same ratio statistic mu = r_{n2}/r_{n1}:

* a closed form at (n1, n2) = (1, 2) using (n_used - 1) in the numerator,
* a generalized likelihood estimator for arbitrary ranks, maximized
  numerically.

Under locally uniform density the ratio density is

    f(mu, d) = d (mu^d - 1)^(n2-n1-1) / (mu^((n2-1) d + 1) B(n2-n1, n1))

for mu > 1.  The log-likelihood in d is unimodal: its derivative

    g(d) = n/d + (n2-n1-1) sum_i log(mu_i) / (1 - mu_i^-d) - (n2-1) sum_i log(mu_i)

decreases monotonically from +inf to -n1 * sum(log mu) < 0, so the maximum
is found by doubling until the sign flips and then bisecting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import betaln

from .neighbors import NeighborGraph, RatioSet, mu_ratios

# Fallback search ceiling when the ambient dimension is unknown; callers that
# know the cloud should pass d_max = 2 * ambient_dim.
_D_MAX_DEFAULT = float(2**20)
_D_FLOOR = 1e-6
_BRACKET_START = 1e-3


class EstimatorError(Exception):
    """The likelihood has no usable maximum for this ratio set."""


class DegenerateCloudError(EstimatorError):
    """Too few ratios above 1 (duplicated or fully tied points)."""


@dataclass(frozen=True)
class IdEstimate:
    d_hat: float
    n1: int
    n2: int
    n_used: int
    method: str

    def __post_init__(self):
        if not (np.isfinite(self.d_hat) and self.d_hat > 0):
            raise ValueError(f"d_hat must be positive and finite, got {self.d_hat}")


@dataclass(frozen=True)
class ScaleSweep:
    """One estimate per range scaling n2 in {2, 4, ..., max}, with n1 = n2/2."""

    scalings: tuple
    estimates: tuple  # IdEstimate or None per scaling
    errors: dict = field(default_factory=dict)  # scaling -> failure message

    def by_scaling(self, s: int) -> IdEstimate | None:
        return dict(zip(self.scalings, self.estimates)).get(s)


def _usable_log_mu(ratios: RatioSet) -> np.ndarray:
    mu = np.asarray(ratios.mu, dtype=np.float64)
    if (mu < 1).any():
        raise ValueError("ratios below 1 are impossible for sorted neighbor distances")
    log_mu = np.log(mu[mu > 1.0])
    return log_mu


def twonn(ratios: RatioSet) -> IdEstimate:
    """Closed-form estimate d = (n_used - 1) / sum(log mu) at ranks (1, 2)."""
    if (ratios.n1, ratios.n2) != (1, 2):
        raise ValueError("this closed form is defined for ranks (1, 2) only")
    log_mu = _usable_log_mu(ratios)
    n_used = log_mu.size
    if n_used < 2:
        raise DegenerateCloudError(
            f"only {n_used} ratios above 1 (degenerate={ratios.n_degenerate}, ties={ratios.n_boundary})"
        )
    total = float(log_mu.sum())
    if total == 0.0:
        raise DegenerateCloudError("all ratios are exactly 1")
    return IdEstimate(d_hat=(n_used - 1) / total, n1=1, n2=2, n_used=n_used, method="twonn")


def _loglik_derivative(d: float, log_mu: np.ndarray, n1: int, n2: int, sum_log_mu: float) -> float:
    n = log_mu.size
    if n2 - n1 - 1 == 0:
        middle = 0.0
    else:
        # log_mu / (1 - mu^-d), stable for both d*log_mu -> 0 and -> inf
        middle = (n2 - n1 - 1) * float(np.sum(log_mu / -np.expm1(-d * log_mu)))
    return n / d + middle - (n2 - 1) * sum_log_mu


def gride(ratios: RatioSet, d_max: float | None = None) -> IdEstimate:
    """Likelihood-based estimate at arbitrary ranks (n1, n2).

    The derivative sign change is bracketed by doubling and then bisected to
    well below 1e-8 in d.  If the derivative is still positive at d_max the
    likelihood has no interior maximum in the search domain and an
    EstimatorError with the boundary diagnostics is raised.
    """
    if d_max is None:
        d_max = 2.0 * ratios.ambient_dim if ratios.ambient_dim > 0 else _D_MAX_DEFAULT
    n1, n2 = ratios.n1, ratios.n2
    log_mu = _usable_log_mu(ratios)
    n_used = log_mu.size
    if n_used < 2:
        raise DegenerateCloudError(
            f"only {n_used} ratios above 1 (degenerate={ratios.n_degenerate}, ties={ratios.n_boundary})"
        )
    sum_log_mu = float(log_mu.sum())

    lo = _BRACKET_START
    g_lo = _loglik_derivative(lo, log_mu, n1, n2, sum_log_mu)
    if g_lo <= 0:  # maximum sits below the bracket start; restart from the floor
        lo = _D_FLOOR
        g_lo = _loglik_derivative(lo, log_mu, n1, n2, sum_log_mu)
        if g_lo <= 0:
            raise EstimatorError(f"derivative non-positive at d={lo}: g={g_lo}")
    hi = lo
    while True:
        hi = min(hi * 2.0, d_max)
        g_hi = _loglik_derivative(hi, log_mu, n1, n2, sum_log_mu)
        if g_hi <= 0:
            break
        if hi >= d_max:
            raise EstimatorError(
                f"no interior maximum in ({_D_FLOOR}, {d_max}]: derivative at the "
                f"boundary is {g_hi} (n_used={n_used}, sum_log_mu={sum_log_mu})"
            )
        lo = hi

    # bisect far tighter than the contract's 1e-8 so closed-form identities
    # hold at 1e-10 relative
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if hi - lo < 1e-12 * max(1.0, hi):
            break
        if _loglik_derivative(mid, log_mu, n1, n2, sum_log_mu) > 0:
            lo = mid
        else:
            hi = mid
    d_hat = 0.5 * (lo + hi)
    return IdEstimate(d_hat=d_hat, n1=n1, n2=n2, n_used=n_used, method="gride")


def log_ratio_density(mu, d: float, n1: int, n2: int) -> np.ndarray:
    """Log of the ratio density f(mu, d); -inf outside the support mu > 1."""
    if not 1 <= n1 < n2:
        raise ValueError("need 1 <= n1 < n2")
    if d <= 0:
        raise ValueError("d must be positive")
    mu = np.asarray(mu, dtype=np.float64)
    out = np.full(mu.shape, -np.inf)
    inside = mu > 1.0
    m = mu[inside]
    log_beta = betaln(n2 - n1, n1)
    with np.errstate(divide="ignore"):
        term = (n2 - n1 - 1) * np.log(-np.expm1(-d * np.log(m))) if n2 - n1 - 1 else 0.0
    # (mu^d - 1)^(n2-n1-1) = mu^(d (n2-n1-1)) (1 - mu^-d)^(n2-n1-1)
    out[inside] = (
        np.log(d)
        + d * (n2 - n1 - 1) * np.log(m)
        + term
        - ((n2 - 1) * d + 1) * np.log(m)
        - log_beta
    )
    return out


def ratio_density(mu, d: float, n1: int, n2: int) -> np.ndarray:
    return np.exp(log_ratio_density(mu, d, n1, n2))


def scale_sweep(graph: NeighborGraph, max_scaling: int) -> ScaleSweep:
    """Run the likelihood estimator at ranks (s/2, s) for s = 2, 4, ..., max_scaling.

    Per-scale failures are recorded and do not abort the other scales.
    """
    if max_scaling < 2 or max_scaling & (max_scaling - 1):
        raise ValueError("max_scaling must be a power of two >= 2")
    if max_scaling > graph.k:
        raise ValueError(f"max_scaling={max_scaling} exceeds graph.k={graph.k}")
    scalings = []
    s = 2
    while s <= max_scaling:
        scalings.append(s)
        s *= 2
    estimates: list[IdEstimate | None] = []
    errors: dict[int, str] = {}
    for s in scalings:
        try:
            estimates.append(gride(mu_ratios(graph, s // 2, s)))
        except EstimatorError as exc:
            estimates.append(None)
            errors[s] = str(exc)
    return ScaleSweep(scalings=tuple(scalings), estimates=tuple(estimates), errors=errors)
