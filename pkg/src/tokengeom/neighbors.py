"""Exact k-nearest-neighbor machinery over one point cloud.

Everything here is brute force on purpose: the estimators downstream are
sensitive to neighbor errors, and at the ~1000-token scale the O(N^2 d)
cost is cheap.  Squared distances are accumulated coordinate-wise in
float64 (no |x|^2 + |y|^2 - 2<x,y> shortcut, which loses digits for close
pairs), and ties are broken by ascending token index so results are
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

# Query rows are processed in blocks to bound the live distance-matrix slab.
_BLOCK_ROWS = 2048


@dataclass(frozen=True)
class NeighborGraph:
    """Per-token sorted nearest neighbors: indices and Euclidean distances (N, k)."""

    k: int
    indices: np.ndarray
    distances: np.ndarray
    ambient_dim: int

    def __post_init__(self):
        if self.indices.shape != self.distances.shape:
            raise ValueError("indices and distances must share shape")
        if self.indices.ndim != 2 or self.indices.shape[1] != self.k:
            raise ValueError("expected (n_tokens, k) arrays")
        n = self.indices.shape[0]
        if (np.diff(self.distances, axis=1) < 0).any():
            raise ValueError("distance rows must be non-decreasing")
        if (self.indices == np.arange(n)[:, None]).any():
            raise ValueError("a row contains the query point's own index")
        if self.indices.min() < 0 or self.indices.max() >= n:
            raise ValueError("neighbor index out of range")

    @property
    def n_tokens(self) -> int:
        return self.indices.shape[0]


@dataclass(frozen=True)
class RatioSet:
    """Neighbor-distance ratios r_{n2}/r_{n1} per token.

    Tokens whose n1-th neighbor sits at distance zero cannot form a ratio and
    are excluded; ``n_degenerate`` counts them.  Ratios exactly equal to 1
    (tied distances) are kept here and filtered by the estimators, whose
    likelihood support is ratios > 1.
    """

    n1: int
    n2: int
    mu: np.ndarray
    n_degenerate: int
    ambient_dim: int

    @property
    def n_boundary(self) -> int:
        """Ratios exactly 1 (estimators exclude these)."""
        return int((self.mu == 1.0).sum())


@dataclass(frozen=True)
class AngleStats:
    """Cosine of the apex angle at each token between its two nearest neighbors."""

    cosines: np.ndarray
    mean_angle_deg: float
    n_excluded: int


def _validate_cloud(cloud: np.ndarray) -> np.ndarray:
    x = np.asarray(cloud, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"point cloud must be 2-d, got shape {x.shape}")
    if x.shape[0] < 2:
        raise ValueError("need at least 2 points")
    if not np.isfinite(x).all():
        raise ValueError("point cloud contains non-finite values")
    return x


def knn(cloud: np.ndarray, k: int) -> NeighborGraph:
    """Exact Euclidean k-nearest neighbors of every point.

    The query point itself is excluded.  Duplicated points show up as
    neighbors at distance 0; downstream ratio code flags them.
    """
    x = _validate_cloud(cloud)
    n = x.shape[0]
    if k < 1:
        raise ValueError("k must be positive")
    if k >= n:
        raise ValueError(f"k={k} must be smaller than the number of points ({n})")

    indices = np.empty((n, k), dtype=np.int64)
    distances = np.empty((n, k), dtype=np.float64)
    for start in range(0, n, _BLOCK_ROWS):
        stop = min(start + _BLOCK_ROWS, n)
        d2 = cdist(x[start:stop], x, metric="sqeuclidean")
        d2[np.arange(stop - start), np.arange(start, stop)] = np.inf
        # stable sort: equal distances resolve to the smaller token index
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        indices[start:stop] = order
        distances[start:stop] = np.sqrt(np.take_along_axis(d2, order, axis=1))
    return NeighborGraph(k=k, indices=indices, distances=distances, ambient_dim=x.shape[1])


def mu_ratios(graph: NeighborGraph, n1: int, n2: int) -> RatioSet:
    """Distance ratios r_{i,n2} / r_{i,n1} over all tokens.

    Tokens with r_{i,n1} == 0 (duplicates) are excluded and tallied.
    """
    if not 1 <= n1 < n2:
        raise ValueError("need 1 <= n1 < n2")
    if n2 > graph.k:
        raise ValueError(f"n2={n2} exceeds graph.k={graph.k}")
    r1 = graph.distances[:, n1 - 1]
    r2 = graph.distances[:, n2 - 1]
    valid = r1 > 0
    mu = r2[valid] / r1[valid]
    return RatioSet(
        n1=n1,
        n2=n2,
        mu=mu,
        n_degenerate=int((~valid).sum()),
        ambient_dim=graph.ambient_dim,
    )


def mean_cosine_similarity(cloud: np.ndarray) -> float:
    """Mean cosine similarity over all unordered pairs of distinct tokens.

    Zero-norm rows carry no direction and are excluded (see
    count_zero_rows for the tally).  Directions are taken from the origin,
    so the result is scale invariant but not translation invariant.
    """
    x = _validate_cloud(cloud)
    norms = np.linalg.norm(x, axis=1)
    nz = norms > 0
    m = int(nz.sum())
    if m < 2:
        raise ValueError("need at least 2 nonzero rows for pairwise cosines")
    unit = x[nz] / norms[nz][:, None]
    # sum over the full Gram matrix equals |sum of unit rows|^2; the diagonal
    # contributes exactly m, so this is the all-pairs sum without the N^2 slab
    total = float(np.sum(unit.sum(axis=0) ** 2))
    return (total - m) / (m * (m - 1))


def count_zero_rows(cloud: np.ndarray) -> int:
    x = np.asarray(cloud, dtype=np.float64)
    return int((np.linalg.norm(x, axis=1) == 0).sum())


def nn_angles(cloud: np.ndarray, graph: NeighborGraph) -> AngleStats:
    """Apex angle at each token between its first and second nearest neighbor.

    Tokens with a zero displacement to either neighbor (duplicates) are
    excluded and tallied.  The mean angle is reported in degrees.
    """
    if graph.k < 2:
        raise ValueError("graph must hold at least 2 neighbors")
    x = _validate_cloud(cloud)
    if graph.n_tokens != x.shape[0]:
        raise ValueError("graph and cloud disagree on token count")
    v1 = x[graph.indices[:, 0]] - x
    v2 = x[graph.indices[:, 1]] - x
    len1 = np.linalg.norm(v1, axis=1)
    len2 = np.linalg.norm(v2, axis=1)
    valid = (len1 > 0) & (len2 > 0)
    cosines = np.einsum("ij,ij->i", v1[valid], v2[valid]) / (len1[valid] * len2[valid])
    cosines = np.clip(cosines, -1.0, 1.0)
    if cosines.size:
        mean_angle = float(np.degrees(np.arccos(cosines)).mean())
    else:
        mean_angle = float("nan")
    return AngleStats(cosines=cosines, mean_angle_deg=mean_angle, n_excluded=int((~valid).sum()))
