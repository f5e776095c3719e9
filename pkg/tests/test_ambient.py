import numpy as np
import pytest

from equideform.ambient import (FlatTorus, ProductM2kR, ScaledSphere,
                                SpaceForm2, killing_fields, killing_fields_at,
                                killing_residual, metric_at, quadric_embed,
                                quadric_to_chart, radial_area, sn_lambda,
                                structure_match)
from equideform.errors import DomainError


def test_sn_closed_forms():
    r = np.linspace(0.05, 2.5, 40)
    sn, snp = sn_lambda(1.0, r)
    assert np.max(np.abs(sn - np.sin(r))) < 1e-14
    assert np.max(np.abs(snp - np.cos(r))) < 1e-14
    sn, snp = sn_lambda(-1.0, r)
    assert np.max(np.abs(sn - np.sinh(r))) < 1e-12
    sn, snp = sn_lambda(0.0, r)
    assert np.max(np.abs(sn - r)) == 0.0
    assert np.all(snp == 1.0)
    sn4, _ = sn_lambda(4.0, 0.7)
    assert sn4 == pytest.approx(np.sin(2 * 0.7) / 2.0, rel=1e-14)


def test_sn_series_matches_closed_form_across_the_cut():
    # |lam| r^2 straddling the series switch: both sides must agree
    for lam in (1.0, -1.0, 0.3, -0.3):
        for scale in (0.3, 0.9, 1.1, 3.0):
            r = np.sqrt(scale * 1e-4 / abs(lam))
            sn, snp = sn_lambda(lam, r)
            if lam > 0:
                ref, refp = np.sin(np.sqrt(lam) * r) / np.sqrt(lam), np.cos(np.sqrt(lam) * r)
            else:
                ref, refp = np.sinh(np.sqrt(-lam) * r) / np.sqrt(-lam), np.cosh(np.sqrt(-lam) * r)
            assert abs(sn - ref) < 1e-15 * max(1.0, abs(ref))
            assert abs(snp - refp) < 1e-15


def test_sn_pythagorean_identity():
    rng = np.random.default_rng(8)
    for _ in range(200):
        lam = rng.uniform(-3.0, 3.0)
        r = rng.uniform(1e-6, 2.0)
        sn, snp = sn_lambda(lam, r)
        assert abs(snp**2 + lam * sn**2 - 1.0) < 1e-12


def test_sn_second_derivative_relation():
    # d(sn')/dr = -lam * sn, checked with central differences
    rng = np.random.default_rng(9)
    for _ in range(50):
        lam = rng.uniform(-2.0, 2.0)
        r = rng.uniform(0.1, 1.5)
        h = 1e-5
        _, sp_plus = sn_lambda(lam, r + h)
        _, sp_minus = sn_lambda(lam, r - h)
        sn, _ = sn_lambda(lam, r)
        assert abs((sp_plus - sp_minus) / (2 * h) + lam * sn) < 1e-6


def test_radial_area_closed_forms_and_derivative():
    assert radial_area(0.0, 1.2) == pytest.approx(0.72, rel=1e-15)
    assert radial_area(1.0, np.pi) == pytest.approx(2.0, rel=1e-14)
    assert radial_area(-1.0, 1.0) == pytest.approx(np.cosh(1.0) - 1.0, rel=1e-14)
    rng = np.random.default_rng(10)
    for _ in range(60):
        lam = rng.uniform(-2.0, 2.0)
        r = rng.uniform(0.05, 1.5)
        h = 1e-5
        d = (radial_area(lam, r + h) - radial_area(lam, r - h)) / (2 * h)
        sn, _ = sn_lambda(lam, r)
        assert abs(d - sn) < 1e-9


def test_radial_area_series_agrees_with_closed_form_below_the_cut():
    for lam in (0.5, -0.5, 2.0, -2.0):
        r = 0.99 * np.sqrt(1e-4 / abs(lam))  # series side of the switch
        got = radial_area(lam, r)
        if lam > 0:
            ref = (1.0 - np.cos(np.sqrt(lam) * r)) / lam
        else:
            ref = (np.cosh(np.sqrt(-lam) * r) - 1.0) / (-lam)
        assert abs(got - ref) < 1e-18 + 1e-10 * abs(ref)


def test_metric_shapes_and_domain_guards():
    assert np.allclose(metric_at(SpaceForm2(0.0), [0.7, 1.0]),
                       np.diag([1.0, 0.49]))
    with pytest.raises(DomainError):
        metric_at(SpaceForm2(1.0), [0.0, 0.3])
    m = metric_at(ProductM2kR(-1.0), [0.5, 0.1, 2.0])
    assert m.shape == (3, 3) and m[2, 2] == 1.0
    with pytest.raises(DomainError):
        metric_at(ScaledSphere(1.0), [np.pi, 0.0])
    with pytest.raises(DomainError):
        FlatTorus(np.array([[1.0, 2.0], [2.0, 1.0]]))  # not positive definite
    with pytest.raises(DomainError):
        ScaledSphere(-1.0)


def test_killing_field_counts():
    assert len(killing_fields(SpaceForm2(1.0))) == 3
    assert len(killing_fields(FlatTorus(np.eye(2)))) == 2
    assert len(killing_fields(ProductM2kR(0.5))) == 4
    assert len(killing_fields(ScaledSphere(2.0))) == 3


def test_killing_residuals_vanish_to_fd_accuracy():
    """Lie derivative of the metric along each closed-form field is ~0."""
    probes = [
        (SpaceForm2(1.0), [(0.6, 0.3), (1.1, 2.0)]),
        (SpaceForm2(-1.0), [(0.6, 0.3), (1.4, 5.0)]),
        (SpaceForm2(0.0), [(0.5, 1.0)]),
        (FlatTorus(np.array([[4.0, 1.0], [1.0, 1.0]])), [(0.2, 0.8)]),
        (ProductM2kR(-0.5), [(0.7, 0.4, 1.3)]),
        (ScaledSphere(1.5), [(1.2, 0.5), (2.0, 3.0)]),
    ]
    for model, pts in probes:
        for p in pts:
            for fld in killing_fields(model):
                assert killing_residual(model, fld, np.array(p)) < 5e-7


def test_rotated_probe_sees_same_residual_scale():
    model = SpaceForm2(0.5)
    flds = killing_fields(model)
    vals = killing_fields_at(model, [0.8, 0.45])
    assert len(vals) == 3 and all(v.shape == (2,) for v in vals)
    # rotation field is the angular coordinate field everywhere
    assert np.allclose(flds[0]([0.8, 0.45]), [0.0, 1.0]) or any(
        np.allclose(v, [0.0, 1.0]) for v in vals)


def test_structure_constants_match_the_algebra():
    for lam in (-1.0, 0.0, 1.0):
        assert structure_match(lam, np.array([0.7, 0.4])) < 1e-6


def test_quadric_roundtrip():
    rng = np.random.default_rng(12)
    for lam in (1.0, -1.0, 0.5, -0.5):
        for _ in range(40):
            r = rng.uniform(0.05, 1.4)
            th = rng.uniform(0.0, 2 * np.pi)
            X = quadric_embed(lam, r, th)
            r2, th2 = quadric_to_chart(lam, X)
            assert abs(r2 - r) < 1e-12
            assert abs((th2 - th + np.pi) % (2 * np.pi) - np.pi) < 1e-12


def test_quadric_embed_lands_on_the_quadric():
    for lam in (1.0, -2.0, 0.25):
        X = quadric_embed(lam, 0.9, 1.1)
        # x0^2 + lam*|y|^2 = 1 on the model quadric
        val = X[0] ** 2 + lam * (X[1] ** 2 + X[2] ** 2)
        assert abs(val - 1.0) < 1e-14


def test_quadric_flat_fiber_is_the_plane():
    X = quadric_embed(0.0, 0.8, 0.3)
    assert X[0] == 1.0
    assert np.hypot(X[1], X[2]) == pytest.approx(0.8, rel=1e-15)
