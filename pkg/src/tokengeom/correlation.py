"""Pearson and Spearman correlation with p-values, plus layerwise studies.

The two-sided p-value uses the exact null relation between the sample
correlation and Student's t with n-2 degrees of freedom,

    t = rho * sqrt((n - 2) / (1 - rho^2)),

with the t survival function evaluated through the regularized incomplete
beta function.  A seeded permutation test is available as a slower
distribution-free cross-check.  Spearman is Pearson on mid-ranks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc
from scipy.stats import rankdata


@dataclass(frozen=True)
class LayerCorrelation:
    layer: int
    pearson: float
    spearman: float
    p_pearson: float
    p_spearman: float
    n: int


@dataclass(frozen=True)
class CorrelationReport:
    per_layer: tuple
    flagged: dict = field(default_factory=dict)  # layer -> reason it was skipped


def _check_pair(x, y, min_n: int = 3):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise ValueError("x and y must be 1-d vectors of equal length")
    if x.size < min_n:
        raise ValueError(f"need at least {min_n} observations, got {x.size}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("inputs contain non-finite values")
    return x, y


def student_t_sf(t: float, df: int) -> float:
    """P(T > t) for Student's t with df degrees of freedom."""
    if df < 1:
        raise ValueError("df must be >= 1")
    p_two = betainc(df / 2.0, 0.5, df / (df + t * t))
    return 0.5 * p_two if t >= 0 else 1.0 - 0.5 * p_two


def _t_pvalue(rho: float, n: int) -> float:
    if abs(rho) >= 1.0:
        return 0.0
    t = abs(rho) * np.sqrt((n - 2) / (1.0 - rho * rho))
    return float(2.0 * student_t_sf(t, n - 2))


def pearson(x, y) -> tuple[float, float]:
    """Sample Pearson coefficient and two-sided t-based p-value."""
    x, y = _check_pair(x, y)
    xd = x - x.mean()
    yd = y - y.mean()
    sx = np.sqrt(np.sum(xd * xd))
    sy = np.sqrt(np.sum(yd * yd))
    if sx == 0.0 or sy == 0.0:
        raise ValueError("correlation undefined: an input has zero variance")
    rho = float(np.clip(np.sum(xd * yd) / (sx * sy), -1.0, 1.0))
    return rho, _t_pvalue(rho, x.size)


def spearman(x, y) -> tuple[float, float]:
    """Rank correlation: Pearson applied to mid-ranks (ties averaged)."""
    x, y = _check_pair(x, y)
    return pearson(rankdata(x, method="average"), rankdata(y, method="average"))


def permutation_pvalue(x, y, n_shuffles: int = 10_000, seed: int = 0, method: str = "pearson") -> float:
    """Two-sided permutation p-value for the chosen coefficient.

    Shuffles y relative to x; includes the +1 continuity correction so the
    estimate never returns exactly zero.
    """
    x, y = _check_pair(x, y)
    stat = pearson if method == "pearson" else spearman
    observed = abs(stat(x, y)[0])
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(n_shuffles):
        rho = stat(x, rng.permutation(y))[0]
        if abs(rho) >= observed:
            hits += 1
    return (hits + 1) / (n_shuffles + 1)


def layerwise_correlation(
    ids_by_layer: np.ndarray,
    target: np.ndarray,
    use_log_id: bool = True,
    min_n: int = 3,
) -> CorrelationReport:
    """Correlate per-prompt ID against a per-prompt scalar, layer by layer.

    ``ids_by_layer`` is (n_prompts, n_layers) with NaN marking estimator
    failures; those prompts drop out pairwise and ``n`` records what's left.
    Layers with fewer than ``min_n`` valid pairs are flagged, not fatal.
    """
    ids_by_layer = np.asarray(ids_by_layer, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if ids_by_layer.ndim != 2:
        raise ValueError("ids_by_layer must be (n_prompts, n_layers)")
    if target.shape != (ids_by_layer.shape[0],):
        raise ValueError("target length must equal the number of prompts")
    if ids_by_layer.shape[0] < min_n:
        raise ValueError(f"need at least {min_n} prompts")

    rows = []
    flagged: dict[int, str] = {}
    for layer in range(ids_by_layer.shape[1]):
        ids = ids_by_layer[:, layer]
        valid = np.isfinite(ids) & np.isfinite(target)
        n = int(valid.sum())
        if n < min_n:
            flagged[layer] = f"only {n} valid pairs"
            continue
        x = np.log(ids[valid]) if use_log_id else ids[valid]
        y = target[valid]
        try:
            rho_p, p_p = pearson(x, y)
            rho_s, p_s = spearman(x, y)
        except ValueError as exc:
            flagged[layer] = str(exc)
            continue
        rows.append(
            LayerCorrelation(layer=layer, pearson=rho_p, spearman=rho_s, p_pearson=p_p, p_spearman=p_s, n=n)
        )
    return CorrelationReport(per_layer=tuple(rows), flagged=flagged)


def bootstrap_pearson_std(
    x, y, n_resamples: int = 1000, seed: int = 0
) -> float:
    """Bootstrap (over observations) standard deviation of the Pearson coefficient."""
    x, y = _check_pair(x, y)
    rng = np.random.default_rng(seed)
    n = x.size
    stats = []
    for _ in range(n_resamples):
        idx = rng.integers(0, n, size=n)
        xd = x[idx]
        yd = y[idx]
        if xd.std() == 0.0 or yd.std() == 0.0:
            continue
        stats.append(pearson(xd, yd)[0])
    if len(stats) < 2:
        return float("nan")
    return float(np.std(stats))
