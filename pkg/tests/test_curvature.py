"""Curvature-engine tests against closed-form and symbolic oracles."""

import numpy as np
import pytest

from htgeo import curvature as C
from htgeo import geometry as G
from htgeo.errors import RouteMismatch, SingularMetric

CAT = G.reference_metrics()


def sphere_scalar_oracle(n, r):
    return n * (n - 1) / r ** 2


# --------------------------------------------------------------------------
# christoffel
# --------------------------------------------------------------------------

def test_flat_christoffels_vanish():
    m = CAT["flat_r4"].field
    pt = G.ChartPoint("cartesian", np.array([0.3, -1.0, 2.0, 0.5]))
    data = C.christoffel(m, pt)
    assert np.max(np.abs(data.symbols)) < 1e-12
    assert data.asymmetry_residual < 1e-12


def test_sphere_factor_christoffel():
    # round 2-sphere factor: Gamma^phi_{psi psi} = -sin(phi) cos(phi)
    m = CAT["s2xs2"].field
    phi = 0.9
    pt = G.ChartPoint("angles", np.array([phi, 0.4, 1.1, 2.0]))
    data = C.christoffel(m, pt)
    assert data.symbols[0, 1, 1] == pytest.approx(-np.sin(phi) * np.cos(phi),
                                                  abs=1e-7)


def test_taubnut_christoffel_vs_symbolic_oracle():
    import sympy as sp

    cfg = G.MonopoleConfig.standard(1)
    m = G.gh_metric(cfg)
    x, y, z = sp.symbols("x y z", real=True)
    px, py, pz = 1, 0, 0
    r = sp.sqrt((x - px) ** 2 + (y - py) ** 2 + (z - pz) ** 2)
    V = 1 + sp.Rational(1, 2) / r
    rho2 = (x - px) ** 2 + (y - py) ** 2
    pref = sp.Rational(1, 2) * (z - pz) / r
    om = sp.Matrix([-pref * (y - py) / rho2, pref * (x - px) / rho2, 0])
    gm = sp.zeros(4, 4)
    for i in range(3):
        for j in range(3):
            gm[i, j] = V * (1 if i == j else 0) + om[i] * om[j] / V
        gm[i, 3] = om[i] / V
        gm[3, i] = om[i] / V
    gm[3, 3] = 1 / V
    coords = [x, y, z]
    point = {x: 0.7, y: -0.4, z: 0.9}
    g_num = np.array(gm.subs(point), dtype=float)
    dg = np.zeros((4, 4, 4))  # dg[mu, a, b]; the fiber direction is Killing
    for mu in range(3):
        for a in range(4):
            for b in range(a, 4):
                val = float(sp.diff(gm[a, b], coords[mu]).subs(point))
                dg[mu, a, b] = dg[mu, b, a] = val
    comb = np.zeros((4, 4, 4))
    for b in range(4):
        for c in range(4):
            for v in range(4):
                comb[b, c, v] = dg[b, c, v] + dg[c, v, b] - dg[v, b, c]
    gamma_exact = 0.5 * np.einsum("av,bcv->abc", np.linalg.inv(g_num), comb)
    pt = G.ChartPoint("gibbons_hawking", np.array([0.7, -0.4, 0.9, 0.3]))
    f = lambda pts: m.components("gibbons_hawking", pts,
                                 gauge=np.zeros(pts.shape[:-1] + (1,)))
    gamma_fd, _, _ = C.christoffel_batch(f, pt.coords[None], np.array([1e-4]))
    assert np.max(np.abs(gamma_fd[0] - gamma_exact)) < 1e-6


# --------------------------------------------------------------------------
# riemann and decomposition
# --------------------------------------------------------------------------

def test_flat_riemann_vanishes():
    m = CAT["flat_r4"].field
    pt = G.ChartPoint("cartesian", np.array([0.3, -1.0, 2.0, 0.5]))
    bundle = C.riemann(m, pt)
    assert np.max(np.abs(bundle.riemann)) < 1e-10
    assert abs(bundle.scalar) < 1e-10


def test_round_sphere_curvature():
    m = CAT["round_s4"].field
    rng = np.random.default_rng(1)
    pts = rng.normal(size=(10, 4))
    bc = C.curvature_batch(m, "stereographic", pts)
    assert np.max(np.abs(bc.scalar - sphere_scalar_oracle(4, 1.0))) < 1e-4
    d = C.density_fields(bc)
    assert np.max(d["w2_plus"]) < 1e-5
    assert np.max(d["w2_minus"]) < 1e-5
    assert np.max(d["z2"]) < 1e-5
    assert np.max(np.abs(d["l"])) < 1e-6


def test_taubnut_ricci_flat():
    for k in (1, 2):
        cfg = G.MonopoleConfig.standard(k)
        m = G.gh_metric(cfg)
        rng = np.random.default_rng(5 + k)
        pts = []
        while len(pts) < 100:
            v = rng.normal(size=3) * 2.0 + cfg.centroid
            if np.min(np.linalg.norm(v - cfg.points, axis=1)) > 0.35:
                pts.append([*v, rng.uniform(0, 2 * np.pi)])
        d = C.characteristic_densities(m, "gibbons_hawking", np.asarray(pts))
        assert np.max(d["ricci_frobenius"]) < 1e-4


def test_taubnut_weyl_one_sided():
    cfg = G.MonopoleConfig.standard(1)
    m = G.gh_metric(cfg)
    rng = np.random.default_rng(7)
    count = 0
    while count < 50:
        v = rng.normal(size=3) * 1.5 + cfg.centroid
        if np.min(np.linalg.norm(v - cfg.points, axis=1)) < 0.45:
            continue
        pt = G.ChartPoint("gibbons_hawking", np.r_[v, 0.2])
        wp, wm = C.weyl_duality_defect(m, pt)
        assert min(wp, wm) < 1e-4 * max(wp, wm)
        assert wm > wp  # curvature sits on the anti-self-dual side
        count += 1


def test_density_route_agreement_and_sign():
    cfg = G.MonopoleConfig.standard(1)
    m = G.gh_metric(cfg)
    for chart, coords in (("gibbons_hawking", np.array([2.2, 0.6, 0.4, 0.1])),
                          ("eguchi_hanson:0", np.array([0.4, -0.3, 0.5, 0.2]))):
        pt = G.ChartPoint(chart, coords)
        e = C.euler_density(m, pt)
        l = C.L_density(m, pt)
        assert e > 0
        assert l < 0


def test_r2xs2_pfaffian_vanishes_pointwise():
    m = CAT["r2xs2"].field
    rng = np.random.default_rng(2)
    pts = np.stack([rng.normal(size=20), rng.normal(size=20),
                    rng.uniform(0.4, 2.7, 20), rng.uniform(0, 6, 20)], axis=-1)
    d = C.characteristic_densities(m, "mixed", pts)
    assert np.max(np.abs(d["euler_pfaffian"])) < 1e-8
    assert np.max(np.abs(d["euler"])) < 1e-8
    # scalar curvature of the unit-sphere factor
    bc = C.curvature_batch(m, "mixed", pts)
    assert np.max(np.abs(bc.scalar - 2.0)) < 1e-6
    # equal self-dual and anti-self-dual Weyl norms
    dd = C.density_fields(bc)
    assert np.max(np.abs(dd["w2_plus"] - dd["w2_minus"])) < 1e-8
    assert np.max(np.abs(dd["w2_plus"] - 1.0 / 6.0)) < 1e-6


def test_route_mismatch_raises_on_corrupt_tolerance():
    cfg = G.MonopoleConfig.standard(1)
    m = G.gh_metric(cfg)
    pt = G.ChartPoint("gibbons_hawking", np.array([2.0, 0.5, 0.3, 0.0]))
    with pytest.raises(RouteMismatch):
        C.euler_density(m, pt, route_tolerance=1e-18)


def test_singular_metric_detection():
    class Degenerate(G.MetricField):
        charts = ("cartesian",)

        def components(self, chart, coords):
            g = np.broadcast_to(np.eye(4), coords.shape[:-1] + (4, 4)).copy()
            g[..., 3, 3] = 1e-14
            return g

    with pytest.raises(SingularMetric):
        C.christoffel(Degenerate(),
                      G.ChartPoint("cartesian", np.zeros(4)))


# --------------------------------------------------------------------------
# invariant suites
# --------------------------------------------------------------------------

def _sample_bundle(metric, chart, pts):
    return C.curvature_batch(metric, chart, np.asarray(pts))


def _catalog_samples():
    rng = np.random.default_rng(9)
    yield CAT["round_s4"].field, "stereographic", rng.normal(size=(6, 4))
    yield (CAT["s2xs2"].field, "angles",
           np.stack([rng.uniform(0.5, 2.5, 6), rng.uniform(0, 6, 6),
                     rng.uniform(0.5, 2.5, 6), rng.uniform(0, 6, 6)], axis=-1))
    cfg = G.MonopoleConfig.standard(2)
    pts = []
    while len(pts) < 6:
        v = rng.normal(size=3) * 1.8
        if np.min(np.linalg.norm(v - cfg.points, axis=1)) > 0.4:
            pts.append([*v, 0.3])
    yield G.gh_metric(cfg), "gibbons_hawking", np.asarray(pts)


def test_first_bianchi_identity():
    for metric, chart, pts in _catalog_samples():
        bc = _sample_bundle(metric, chart, pts)
        r = bc.riemann_up
        cyc = (r + np.moveaxis(r, (2, 3, 4), (3, 4, 2))
               + np.moveaxis(r, (2, 3, 4), (4, 2, 3)))
        scale = max(np.max(np.abs(r)), 1.0)
        assert np.max(np.abs(cyc)) < 1e-5 * scale


def test_riemann_antisymmetries_and_pair_symmetry():
    for metric, chart, pts in _catalog_samples():
        bc = _sample_bundle(metric, chart, pts)
        rl = bc.riemann_low
        scale = max(np.max(np.abs(rl)), 1.0)
        assert np.max(np.abs(rl + np.swapaxes(rl, 1, 2))) < 1e-6 * scale
        assert np.max(np.abs(rl + np.swapaxes(rl, 3, 4))) < 1e-6 * scale
        pair = np.moveaxis(rl, (1, 2, 3, 4), (3, 4, 1, 2))
        assert np.max(np.abs(rl - pair)) < 1e-5 * scale


def test_metric_compatibility():
    # FD covariant derivative of the metric vanishes
    for metric, chart, pts in _catalog_samples():
        pts = np.asarray(pts)
        h = C.DEFAULT_STEP_FACTOR * metric.fd_scale(chart, pts)
        f = metric.batch_evaluator(chart, pts)
        gamma, g0, _ = C.christoffel_batch(f, pts, h)
        offs = np.concatenate([np.eye(4), -np.eye(4)])
        stencil = pts[:, None, :] + h[:, None, None] * offs
        g = f(stencil)
        dg = (g[:, :4] - g[:, 4:]) / (2 * h[:, None, None, None])
        # nabla_m g_{ab} = d_m g_{ab} - G^l_{ma} g_{lb} - G^l_{mb} g_{al}
        t1 = np.einsum("nlma,nlb->nmab", gamma, g0)
        t2 = np.einsum("nlmb,nal->nmab", gamma, g0)
        nabla = dg - t1 - t2
        assert np.max(np.abs(nabla)) < 1e-5


def test_decomposition_consistency():
    for metric, chart, pts in _catalog_samples():
        bc = _sample_bundle(metric, chart, pts)
        tr_ric = np.einsum("nab,nab->n", bc.metric_inv, bc.ricci)
        assert np.max(np.abs(tr_ric - bc.scalar)) < 1e-8 * max(
            1.0, np.max(np.abs(bc.scalar)))
        tr_z = np.einsum("nab,nab->n", bc.metric_inv, bc.traceless_ricci)
        assert np.max(np.abs(tr_z)) < 1e-8
        assert np.max(np.abs(np.einsum("nii->n", bc.wplus))) < 1e-8
        assert np.max(np.abs(np.einsum("nii->n", bc.wminus))) < 1e-8


def test_reassembly_from_blocks():
    for metric, chart, pts in _catalog_samples():
        bc = _sample_bundle(metric, chart, pts)
        rebuilt = C.reassembled_operator(bc)
        scale = max(np.max(np.abs(bc.operator6)), 1.0)
        assert np.max(np.abs(rebuilt - bc.operator6)) < 1e-5 * scale


def test_density_route_agreement_catalog():
    for metric, chart, pts in _catalog_samples():
        bc = _sample_bundle(metric, chart, pts)
        d = C.density_fields(bc)
        scale = max(np.max(np.abs(d["euler"])), 1e-9)
        assert np.max(np.abs(d["euler"] - d["euler_pfaffian"])) < 1e-5 * scale
        scale = max(np.max(np.abs(d["l"])), 1e-9)
        assert np.max(np.abs(d["l"] - d["l_polynomial"])) < 1e-4 * scale


def test_step_robustness_second_order():
    # halving the step changes the S4 Euler density at second order
    # steps chosen large enough that truncation dominates roundoff
    m = CAT["round_s4"].field
    pt = np.array([[0.7, -0.2, 0.4, 1.1]])
    vals = {}
    for h in (8e-3, 4e-3, 2e-3):
        bc = C.curvature_batch(m, "stereographic", pt, step=h)
        vals[h] = float(C.density_fields(bc)["euler"][0])
    d1 = abs(vals[8e-3] - vals[4e-3])
    d2 = abs(vals[4e-3] - vals[2e-3])
    assert d2 < 0.35 * d1  # consistent with second-order convergence
