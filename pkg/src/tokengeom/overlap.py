"""Neighborhood overlap between two representations of the same tokens.

For each token the fraction of shared k-nearest neighbors between the two
graphs is averaged over tokens, yielding a similarity in [0, 1].  Applied to
adjacent layers it measures how much pairwise token structure survives one
layer update.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .io import LayerStack
from .neighbors import NeighborGraph, knn

DEFAULT_K = 2


@dataclass(frozen=True)
class OverlapProfile:
    """Adjacent-layer overlap chi for transitions l -> l+1, l = 0..L-1."""

    k: int
    chi: np.ndarray

    def __post_init__(self):
        if ((self.chi < 0) | (self.chi > 1)).any():
            raise ValueError("overlap values must lie in [0, 1]")


def neighborhood_overlap(graph_l: NeighborGraph, graph_m: NeighborGraph, k: int) -> float:
    """Average fraction of shared k-nearest neighbors per token."""
    if graph_l.n_tokens != graph_m.n_tokens:
        raise ValueError("graphs cover different token sets")
    if k < 1:
        raise ValueError("k must be positive")
    if k > graph_l.k or k > graph_m.k:
        raise ValueError(f"k={k} exceeds a graph's stored neighbors")
    a = graph_l.indices[:, :k]
    b = graph_m.indices[:, :k]
    shared = 0
    for i in range(a.shape[0]):
        shared += np.intersect1d(a[i], b[i], assume_unique=True).size
    return shared / (a.shape[0] * k)


def overlap_profile(stack: LayerStack, k: int = DEFAULT_K) -> OverlapProfile:
    """Adjacent-layer neighborhood overlap across a full stack."""
    if stack.n_layers < 2:
        raise ValueError("need at least 2 layers for adjacent overlaps")
    if k < 1:
        raise ValueError("k must be positive")
    graphs = [knn(stack.layer(i), k) for i in range(stack.n_layers)]
    chi = np.array(
        [neighborhood_overlap(graphs[i], graphs[i + 1], k) for i in range(stack.n_layers - 1)]
    )
    return OverlapProfile(k=k, chi=chi)
