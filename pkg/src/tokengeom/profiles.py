"""Per-prompt result records produced by the analysis pipeline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .correlation import CorrelationReport, layerwise_correlation
from .id_estimators import IdEstimate, ScaleSweep

REFERENCE_TOKENS = 1024  # prompt length the reference curves assume


@dataclass(frozen=True)
class LayerGeometry:
    layer: int
    id_sweep: ScaleSweep | None
    mean_cosine: float | None
    overlap_next: float | None  # None for the final layer or when not requested
    angle_mean_deg: float | None
    degenerate_count: int

    def id_at(self, scaling: int) -> float | None:
        if self.id_sweep is None:
            return None
        est = self.id_sweep.by_scaling(scaling)
        return est.d_hat if est is not None else None


@dataclass(frozen=True)
class GeometryProfile:
    prompt_id: str
    s: int
    n_tokens: int
    dim: int
    per_layer: tuple
    logits_id: ScaleSweep | None = None

    def __post_init__(self):
        for i, entry in enumerate(self.per_layer):
            if entry.layer != i:
                raise ValueError("layer indices must be contiguous from 0")

    @property
    def n_layers(self) -> int:
        return len(self.per_layer)

    @property
    def comparable_to_reference(self) -> bool:
        return self.n_tokens >= REFERENCE_TOKENS

    def id_profile(self, scaling: int) -> np.ndarray:
        """Per-layer ID at one scaling; NaN where the estimate failed."""
        return np.array(
            [e.id_at(scaling) if e.id_at(scaling) is not None else np.nan for e in self.per_layer]
        )


def _sweep_to_dict(sweep: ScaleSweep | None):
    if sweep is None:
        return None
    out = {}
    for s, est in zip(sweep.scalings, sweep.estimates):
        if est is None:
            out[str(s)] = None
        else:
            out[str(s)] = {"d_hat": est.d_hat, "n_used": est.n_used, "method": est.method}
    if sweep.errors:
        out["errors"] = {str(k): v for k, v in sweep.errors.items()}
    return out


def _sweep_from_dict(doc) -> ScaleSweep | None:
    if doc is None:
        return None
    errors = {int(k): v for k, v in doc.get("errors", {}).items()}
    scalings = sorted(int(k) for k in doc if k != "errors")
    estimates = []
    for s in scalings:
        item = doc[str(s)]
        if item is None:
            estimates.append(None)
        else:
            estimates.append(
                IdEstimate(
                    d_hat=float(item["d_hat"]),
                    n1=s // 2,
                    n2=s,
                    n_used=int(item["n_used"]),
                    method=str(item["method"]),
                )
            )
    return ScaleSweep(scalings=tuple(scalings), estimates=tuple(estimates), errors=errors)


def profile_to_dict(profile: GeometryProfile) -> dict:
    return {
        "schema_version": 1,
        "prompt_id": profile.prompt_id,
        "s": profile.s,
        "n_tokens": profile.n_tokens,
        "dim": profile.dim,
        "comparable_to_reference": profile.comparable_to_reference,
        "per_layer": [
            {
                "layer": e.layer,
                "id": _sweep_to_dict(e.id_sweep),
                "mean_cosine": e.mean_cosine,
                "overlap_next": e.overlap_next,
                "angle_mean_deg": e.angle_mean_deg,
                "degenerate_count": e.degenerate_count,
            }
            for e in profile.per_layer
        ],
        "logits_id": _sweep_to_dict(profile.logits_id),
    }


def profile_from_dict(doc: dict) -> GeometryProfile:
    entries = []
    for item in doc["per_layer"]:
        entries.append(
            LayerGeometry(
                layer=int(item["layer"]),
                id_sweep=_sweep_from_dict(item.get("id")),
                mean_cosine=item.get("mean_cosine"),
                overlap_next=item.get("overlap_next"),
                angle_mean_deg=item.get("angle_mean_deg"),
                degenerate_count=int(item.get("degenerate_count", 0)),
            )
        )
    return GeometryProfile(
        prompt_id=str(doc["prompt_id"]),
        s=int(doc.get("s", 0)),
        n_tokens=int(doc["n_tokens"]),
        dim=int(doc["dim"]),
        per_layer=tuple(entries),
        logits_id=_sweep_from_dict(doc.get("logits_id")),
    )


def layerwise_id_loss_correlation(
    population,
    scaling: int = 2,
    use_log_id: bool = True,
) -> CorrelationReport:
    """Per-layer correlation of (log) ID against average cross-entropy loss.

    ``population`` is a list of (GeometryProfile, EntropyReport) pairs over a
    prompt set; profiles must cover the same layer range.  Prompts whose
    estimate failed at a layer drop out pairwise.
    """
    if len(population) < 3:
        raise ValueError("need at least 3 prompts")
    n_layers = population[0][0].n_layers
    for profile, _ in population:
        if profile.n_layers != n_layers:
            raise ValueError("profiles cover different layer ranges")
    ids = np.stack([profile.id_profile(scaling) for profile, _ in population])
    loss = np.array([report.avg_cross_entropy for _, report in population])
    return layerwise_correlation(ids, loss, use_log_id=use_log_id)
