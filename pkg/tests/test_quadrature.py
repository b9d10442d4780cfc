"""Quadrature tests: exactness, determinism, additivity, extrapolation."""

import numpy as np
import pytest

from htgeo import geometry as G
from htgeo import quadrature as Q
from htgeo.errors import BadFit, NonFinite

CAT = G.reference_metrics()
FLAT = CAT["flat_r4"].field
S4 = CAT["round_s4"].field


def ones(chart, pts):
    return np.ones(pts.shape[0])


def zero(chart, pts):
    return np.zeros(pts.shape[0])


def test_zero_density_is_zero():
    plan = Q.IntegrationPlan(grid=(8, 8, 8, 8), box=((0, 1),) * 4)
    res = Q.integrate_density(FLAT, zero, plan)
    assert res.value == 0.0


def test_constant_density_over_box():
    plan = Q.IntegrationPlan(grid=(8, 8, 8, 8),
                             box=((0, 1.5), (0, 2.0), (0, 0.5), (0, 1.0)))
    res = Q.integrate_density(FLAT, ones, plan)
    assert res.value == pytest.approx(1.5, abs=1e-10)


def test_plan_validation():
    with pytest.raises(ValueError):
        Q.IntegrationPlan(grid=(4, 8, 8, 8))
    with pytest.raises(ValueError):
        Q.IntegrationPlan(extrapolation="quadratic")


def test_nonfinite_detection():
    plan = Q.IntegrationPlan(grid=(8, 8, 8, 8), box=((0, 1),) * 4)

    def bad(chart, pts):
        out = np.ones(pts.shape[0])
        out[0] = np.nan
        return out

    with pytest.raises(NonFinite):
        Q.integrate_density(FLAT, bad, plan)


def test_sphere_volume():
    plan = Q.IntegrationPlan(grid=(40, 12, 16, 8))
    res = Q.integrate_density(S4, ones, plan)
    assert res.value == pytest.approx(8 * np.pi ** 2 / 3, rel=1e-10)


def test_taubnut_volume_identity():
    # closed-form potential integral over the truncation ball
    cfg = G.MonopoleConfig.standard(2)
    m = G.gh_metric(cfg)
    R = 8.0
    plan = Q.IntegrationPlan(outer_radius=R, grid=(48, 16, 24, 8))
    res = Q.integrate_density(m, ones, plan)
    exact = 2 * np.pi * ((4 * np.pi / 3) * R ** 3 + 2 * np.pi * (R ** 2 - 1 / 3))
    assert res.value == pytest.approx(exact, rel=2e-4)


def test_determinism_bitwise():
    cfg = G.MonopoleConfig.standard(1)
    m = G.gh_metric(cfg)
    plan = Q.IntegrationPlan(outer_radius=6.0, grid=(16, 8, 8, 8),
                             ball_grid=(8, 8, 8, 8))
    a = Q.integrate_density(m, ones, plan)
    b = Q.integrate_density(m, ones, plan)
    assert float(a.value) == float(b.value)


def test_radial_additivity_bitwise():
    cfg = G.MonopoleConfig.standard(1)
    m = G.gh_metric(cfg)
    split = 3.0
    plan = Q.IntegrationPlan(outer_radius=6.0, grid=(16, 8, 8, 8),
                             ball_grid=(8, 8, 8, 8), radial_breaks=(split,))
    whole = Q.integrate_density(m, ones, plan)
    inner = Q.integrate_density(m, ones, plan, r_range=(0.0, split))
    outer = Q.integrate_density(m, ones, plan, r_range=(split, 6.0))
    import math
    assert math.fsum([float(inner.value), float(outer.value)]) \
        == float(whole.value)


def test_grid_refinement_within_error_estimate():
    plan = Q.IntegrationPlan(grid=(16, 8, 8, 8))
    coarse = Q.integrate_density(S4, _s4_density, plan)
    fine = Q.integrate_density(
        S4, _s4_density, Q.IntegrationPlan(grid=(32, 16, 16, 16)))
    assert abs(float(coarse.value) - float(fine.value)) <= max(
        coarse.error_estimate, 1e-8)


def _s4_density(chart, pts):
    return 1.0 / (1.0 + np.sum(pts ** 2, axis=-1))


def test_synthetic_tail_extrapolation():
    # density engineered so the truncated integral is c0 + c1/R exactly
    cfg = G.MonopoleConfig.standard(1)
    m = G.gh_metric(cfg)
    c1 = -3.0

    def density(chart, pts):
        if chart != "gibbons_hawking":
            return np.zeros(pts.shape[0])
        r = np.linalg.norm(pts[:, :3] - cfg.centroid, axis=1)
        V = G.potential(cfg, pts[:, :3])
        return -c1 / (8 * np.pi ** 2 * V * r ** 4)

    plan = Q.IntegrationPlan(outer_radius=24.0, grid=(48, 8, 8, 8),
                             ball_grid=(8, 8, 8, 8))
    results, limit = Q.radius_sweep(m, density, [8.0, 12.0, 16.0, 24.0], plan)
    # value(R) = const + c1/R; slopes between radii determine c1
    v = [float(r.value) for r in results]
    assert v[1] - v[0] == pytest.approx(c1 / 12 - c1 / 8, rel=1e-6)
    c0 = v[-1] - c1 / 24.0
    assert float(limit.value) == pytest.approx(c0, abs=1e-6 * abs(c0))
    assert limit.extrapolated


def test_sweep_requires_increasing_radii():
    cfg = G.MonopoleConfig.standard(1)
    m = G.gh_metric(cfg)
    plan = Q.IntegrationPlan(grid=(8, 8, 8, 8))
    with pytest.raises(ValueError):
        Q.radius_sweep(m, ones, [8.0, 6.0, 10.0], plan)


def test_bad_fit_detection():
    cfg = G.MonopoleConfig.standard(1)
    m = G.gh_metric(cfg)

    def oscillating(chart, pts):
        if chart != "gibbons_hawking":
            return np.zeros(pts.shape[0])
        r = np.linalg.norm(pts[:, :3] - cfg.centroid, axis=1)
        V = G.potential(cfg, pts[:, :3])
        return np.cos(2.0 * r) / (V * r ** 2)

    plan = Q.IntegrationPlan(outer_radius=16.0, grid=(64, 8, 8, 8),
                             ball_grid=(8, 8, 8, 8))
    with pytest.raises(BadFit):
        Q.radius_sweep(m, oscillating, [8.0, 9.5, 11.0, 12.5, 14.0, 16.0],
                       plan)


def test_chart_handover_consistency():
    # moving the smoothing-ball handover radius changes the volume integral
    # by less than the error estimate
    cfg = G.MonopoleConfig.standard(1)
    m = G.gh_metric(cfg)
    vals = []
    for b in (0.5, 0.7):
        plan = Q.IntegrationPlan(outer_radius=6.0, grid=(24, 12, 12, 8),
                                 ball_grid=(12, 10, 10, 8),
                                 nut_ball_radius=b)
        vals.append(Q.integrate_density(m, ones, plan))
    delta = abs(float(vals[0].value) - float(vals[1].value))
    scale = abs(float(vals[0].value))
    assert delta < 1e-4 * scale


def test_blend_weight_profile():
    b = 0.8
    assert Q.blend_weight(0.0, b) == 1.0
    assert Q.blend_weight(0.39 * b, b) == 1.0
    assert Q.blend_weight(b, b) == 0.0
    assert Q.blend_weight(1.5 * b, b) == 0.0
    mid = Q.blend_weight(0.75 * b, b)
    assert 0.0 < mid < 1.0
