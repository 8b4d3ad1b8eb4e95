"""Synthetic point clouds with known intrinsic dimension.

Used as the validation oracle for the dimension estimators: a manifold of
known dimension is sampled in latent coordinates and embedded isometrically
into the ambient space, so the true dimension is preserved exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .io import LayerStack

MANIFOLD_KINDS = ("hypercube", "hypersphere", "gaussian")


@dataclass(frozen=True)
class SyntheticSpec:
    manifold_kind: str
    latent_dim: int
    ambient_dim: int
    n_points: int
    seed: int

    def __post_init__(self):
        if self.manifold_kind not in MANIFOLD_KINDS:
            raise ValueError(f"unknown manifold kind {self.manifold_kind!r}")
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be positive")
        if self.ambient_dim < self.latent_dim:
            raise ValueError("ambient_dim must be >= latent_dim")
        # A d-sphere needs d+1 carrier coordinates.
        if self.manifold_kind == "hypersphere" and self.ambient_dim < self.latent_dim + 1:
            raise ValueError("hypersphere needs ambient_dim >= latent_dim + 1")
        if self.n_points < 1:
            raise ValueError("n_points must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def _random_orthonormal(carrier_dim: int, ambient_dim: int, rng: np.random.Generator) -> np.ndarray:
    """Columns-orthonormal (ambient_dim, carrier_dim) embedding matrix via QR."""
    g = rng.standard_normal((ambient_dim, carrier_dim))
    q, r = np.linalg.qr(g)
    # Fix the sign convention so the result is deterministic across BLAS builds.
    q = q * np.sign(np.diag(r))
    return q


def generate_synthetic(spec: SyntheticSpec) -> np.ndarray:
    """Sample ``spec.n_points`` points on the requested manifold.

    Returns an (n_points, ambient_dim) float64 cloud.  When the carrier
    dimension equals ambient_dim the embedding is the identity, so e.g.
    hypercube samples sit literally in the unit box.
    """
    rng = np.random.default_rng(spec.seed)
    kind = spec.manifold_kind
    if kind == "hypercube":
        latent = rng.uniform(0.0, 1.0, size=(spec.n_points, spec.latent_dim))
    elif kind == "gaussian":
        latent = rng.standard_normal((spec.n_points, spec.latent_dim))
    else:  # hypersphere: uniform on the unit d-sphere in d+1 carrier coords
        g = rng.standard_normal((spec.n_points, spec.latent_dim + 1))
        latent = g / np.linalg.norm(g, axis=1, keepdims=True)

    carrier_dim = latent.shape[1]
    if carrier_dim == spec.ambient_dim:
        return latent
    q = _random_orthonormal(carrier_dim, spec.ambient_dim, rng)
    return latent @ q.T


def synthetic_layerstack(
    prompt_id: str,
    latent_dims: list[int],
    ambient_dim: int,
    n_points: int,
    seed: int,
    manifold_kind: str = "hypercube",
) -> LayerStack:
    """Stack one synthetic cloud per entry of ``latent_dims``.

    Handy for fixtures whose intrinsic-dimension profile is known by
    construction (e.g. a low-high-low hump across layers).
    """
    layers = []
    for i, d in enumerate(latent_dims):
        spec = SyntheticSpec(
            manifold_kind=manifold_kind,
            latent_dim=d,
            ambient_dim=ambient_dim,
            n_points=n_points,
            seed=(seed + 0x9E3779B9 * (i + 1)) % 2**64,
        )
        layers.append(generate_synthetic(spec))
    return LayerStack(prompt_id=prompt_id, layers=np.stack(layers).astype(np.float32))
