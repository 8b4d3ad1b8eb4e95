import numpy as np
import pytest

from tokengeom.entropy import EntropyReport
from tokengeom.id_estimators import IdEstimate, ScaleSweep
from tokengeom.profiles import (
    GeometryProfile,
    LayerGeometry,
    layerwise_id_loss_correlation,
    profile_from_dict,
    profile_to_dict,
)


def make_sweep(d_hat, scalings=(2,)):
    ests = tuple(
        IdEstimate(d_hat=d_hat * (1 + 0.01 * i), n1=s // 2, n2=s, n_used=100, method="gride")
        for i, s in enumerate(scalings)
    )
    return ScaleSweep(scalings=tuple(scalings), estimates=ests)


def make_profile(prompt_id, d_hats, s=0):
    entries = tuple(
        LayerGeometry(
            layer=i,
            id_sweep=make_sweep(d),
            mean_cosine=0.1 * i,
            overlap_next=0.5 if i < len(d_hats) - 1 else None,
            angle_mean_deg=60.0,
            degenerate_count=0,
        )
        for i, d in enumerate(d_hats)
    )
    return GeometryProfile(prompt_id=prompt_id, s=s, n_tokens=128, dim=8, per_layer=entries)


def make_report(loss):
    return EntropyReport(
        avg_cross_entropy=loss,
        avg_contextual_entropy=loss,
        per_token_softmax_entropy=np.full(128, loss),
    )


def test_layer_indices_must_be_contiguous():
    entry = LayerGeometry(5, None, None, None, None, 0)
    with pytest.raises(ValueError):
        GeometryProfile("p", 0, 10, 2, (entry,))


def test_roundtrip_dict():
    profile = make_profile("p1", [2.0, 5.0, 2.0])
    doc = profile_to_dict(profile)
    back = profile_from_dict(doc)
    assert back.prompt_id == "p1"
    assert back.n_layers == 3
    assert np.allclose(back.id_profile(2), profile.id_profile(2))
    assert back.per_layer[0].overlap_next == 0.5
    assert back.per_layer[2].overlap_next is None


def test_id_profile_marks_failures_as_nan():
    sweep = ScaleSweep(scalings=(2,), estimates=(None,), errors={2: "boom"})
    entry = LayerGeometry(0, sweep, None, None, None, 0)
    ok = LayerGeometry(1, make_sweep(3.0), None, None, None, 0)
    profile = GeometryProfile("p", 0, 10, 2, (entry, ok))
    ids = profile.id_profile(2)
    assert np.isnan(ids[0]) and ids[1] == pytest.approx(3.0)


def test_comparable_flag():
    assert not make_profile("p", [2.0]).comparable_to_reference
    big = GeometryProfile(
        "p", 0, 1024, 8, (LayerGeometry(0, None, None, None, None, 0),)
    )
    assert big.comparable_to_reference


def test_layerwise_id_loss_correlation_exact_fixture():
    losses = [0.5, 0.9, 1.4, 2.2, 3.1]
    population = [
        (make_profile(f"p{i}", list(np.exp([loss, 2 * loss, loss]))), make_report(loss))
        for i, loss in enumerate(losses)
    ]
    report = layerwise_id_loss_correlation(population, scaling=2)
    assert len(report.per_layer) == 3
    for row in report.per_layer:
        assert row.pearson == pytest.approx(1.0, abs=1e-8)


def test_layerwise_id_loss_correlation_preconditions():
    population = [(make_profile("a", [2.0]), make_report(0.1))] * 2
    with pytest.raises(ValueError):
        layerwise_id_loss_correlation(population)
    mismatched = [
        (make_profile("a", [2.0]), make_report(0.1)),
        (make_profile("b", [2.0, 3.0]), make_report(0.2)),
        (make_profile("c", [2.0]), make_report(0.3)),
    ]
    with pytest.raises(ValueError):
        layerwise_id_loss_correlation(mismatched)
