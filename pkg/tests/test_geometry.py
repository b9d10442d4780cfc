"""Metric-field tests: potential, connection, charts, smoothing split,
almost-complex triple, reference catalog."""

import numpy as np
import pytest

from htgeo import geometry as G
from htgeo.errors import AtMonopole, DegenerateRadius, OnDiracString, OutsideBall


@pytest.fixture(scope="module")
def cfg2():
    return G.MonopoleConfig.standard(2)


# --------------------------------------------------------------------------
# potential
# --------------------------------------------------------------------------

def test_potential_single_monopole():
    cfg = G.MonopoleConfig.standard(1)
    assert np.allclose(cfg.points[0], [1.0, 0.0, 0.0])
    assert G.potential(cfg, np.zeros(3)) == pytest.approx(1.5, abs=1e-15)


def test_potential_two_monopoles_on_axis(cfg2):
    # equidistant point on the symmetry axis: both terms are (1/2)/d
    x = np.array([0.0, 0.0, 1.3])
    d = np.sqrt(1 + 1.3 ** 2)
    assert G.potential(cfg2, x) == pytest.approx(1 + 1 / d, rel=1e-14)


def test_potential_matches_direct_summation():
    cfg = G.MonopoleConfig.standard(3)
    x = np.array([10.0, 0.0, 0.0])
    direct = 1.0 + 0.5 * sum(1.0 / np.linalg.norm(x - p) for p in cfg.points)
    assert G.potential(cfg, x) == pytest.approx(direct, rel=1e-13)


def test_potential_at_monopole_raises():
    cfg = G.MonopoleConfig.standard(1)
    with pytest.raises(AtMonopole):
        G.potential(cfg, cfg.points[0])


def test_potential_is_harmonic(cfg2):
    h = 1e-3
    for x0 in (np.array([0.2, 0.3, 1.8]), np.array([-1.5, 2.0, 0.8]),
               np.array([0.0, -2.2, -1.0])):
        lap = 0.0
        for mu in range(3):
            e = np.zeros(3)
            e[mu] = h
            lap += (G.potential(cfg2, x0 + e) - 2 * G.potential(cfg2, x0)
                    + G.potential(cfg2, x0 - e)) / h ** 2
        assert abs(lap) < 1e-6


# --------------------------------------------------------------------------
# connection form
# --------------------------------------------------------------------------

def test_connection_equatorial_component():
    cfg = G.MonopoleConfig.standard(1)
    # equatorial plane of the monopole: cos(phi) = 0 in the symmetric gauge
    om = G.connection_form(cfg, np.array([1.0 + 0.8, 0.0, 0.0]))
    assert np.allclose(om, 0.0, atol=1e-14)


def _fd_curl(f, x0, h=1e-4):
    dom = np.zeros((3, 3))
    for mu in range(3):
        e = np.zeros(3)
        e[mu] = h
        dom[mu] = (f(x0 + e) - f(x0 - e)) / (2 * h)
    return np.array([dom[1, 2] - dom[2, 1],
                     dom[2, 0] - dom[0, 2],
                     dom[0, 1] - dom[1, 0]])


def _fd_grad(cfg, x0, h=1e-5):
    out = np.zeros(3)
    for mu in range(3):
        e = np.zeros(3)
        e[mu] = h
        out[mu] = (G.potential(cfg, x0 + e) - G.potential(cfg, x0 - e)) / (2 * h)
    return out


def test_connection_curvature_is_star_dv(cfg2):
    x0 = np.array([0.4, 0.9, -0.7])
    curl = _fd_curl(lambda x: G.connection_form(cfg2, x), x0)
    assert np.max(np.abs(curl - _fd_grad(cfg2, x0))) < 1e-8


def test_connection_gauge_covariance(cfg2):
    x0 = np.array([0.4, 0.9, -0.7])
    curl_sym = _fd_curl(lambda x: G.connection_form(cfg2, x), x0)
    curl_up = _fd_curl(
        lambda x: G.connection_form(cfg2, x, gauge=np.array([1.0, 1.0])), x0)
    curl_dn = _fd_curl(
        lambda x: G.connection_form(cfg2, x, gauge=np.array([-1.0, -1.0])), x0)
    assert np.max(np.abs(curl_sym - curl_up)) < 1e-8
    assert np.max(np.abs(curl_sym - curl_dn)) < 1e-8


def test_connection_string_detection():
    cfg = G.MonopoleConfig.standard(1)
    with pytest.raises(OnDiracString):
        G.connection_form(cfg, cfg.points[0] + [0.0, 0.0, 2.0])
    # the auto gauge is regular approaching the ray away from the point
    om = G.connection_form(cfg, cfg.points[0] + [1e-6, 0.0, 2.0],
                           gauge="auto")
    assert np.all(np.isfinite(om))
    assert np.max(np.abs(om)) < 1e-4


# --------------------------------------------------------------------------
# metric field
# --------------------------------------------------------------------------

def test_gh_metric_block_structure(cfg2):
    m = G.gh_metric(cfg2)
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(30, 3)) * 2.0
    pts = pts[np.min(np.linalg.norm(
        pts[:, None] - cfg2.points, axis=-1), axis=1) > 0.3]
    coords = np.concatenate(
        [pts, rng.uniform(0, 2 * np.pi, (len(pts), 1))], axis=1)
    g = m.components("gibbons_hawking", coords)
    V = G.potential(cfg2, pts)
    assert np.max(np.abs(np.linalg.det(g) - V ** 2)) < 1e-12
    assert np.max(np.abs(g[:, 3, 3] - 1.0 / V)) < 1e-14
    assert np.min(np.linalg.eigvalsh(g)) > 0


def test_gh_metric_hand_expanded_oracle():
    # single monopole at (1,0,0), evaluated at (2,0,0): r = 1, V = 3/2,
    # symmetric-gauge connection vanishes on the equatorial plane
    cfg = G.MonopoleConfig.standard(1)
    m = G.gh_metric(cfg)
    g = m.components("gibbons_hawking",
                     np.array([[2.0, 0.0, 0.0, 0.0]]),
                     gauge=np.zeros((1, 1)))[0]
    expected = np.diag([1.5, 1.5, 1.5, 1 / 1.5])
    assert np.max(np.abs(g - expected)) < 1e-12


def test_collar_chart_matches_gh(cfg2):
    m = G.gh_metric(cfg2)
    rho, phi, psi, th = 0.2, 1.1, 0.7, 0.3
    r = 1.0 / rho
    x = np.array([r * np.sin(phi) * np.cos(psi),
                  r * np.sin(phi) * np.sin(psi),
                  r * np.cos(phi), th])
    g_gh = m.components("gibbons_hawking", x[None])[0]
    g_col = m.components("collar", np.array([[rho, phi, psi, th]]))[0]
    # pull the gh metric back through the coordinate map numerically
    def fwd(q):
        rr = 1.0 / q[0]
        return np.array([rr * np.sin(q[1]) * np.cos(q[2]),
                         rr * np.sin(q[1]) * np.sin(q[2]),
                         rr * np.cos(q[1]), q[3]])
    h = 1e-6
    J = np.zeros((4, 4))
    q0 = np.array([rho, phi, psi, th])
    for mu in range(4):
        e = np.zeros(4)
        e[mu] = h
        J[:, mu] = (fwd(q0 + e) - fwd(q0 - e)) / (2 * h)
    assert np.max(np.abs(J.T @ g_gh @ J - g_col)) < 1e-6


# --------------------------------------------------------------------------
# smoothing coordinates
# --------------------------------------------------------------------------

def test_eh_coordinates_axis_point():
    y = G.eh_coordinates(0.8, 0.0, 0.0, 0.0)
    assert np.allclose(y, [np.sqrt(1.6), 0, 0, 0], atol=1e-15)


def test_eh_coordinates_modulus_and_roundtrip():
    rng = np.random.default_rng(3)
    for _ in range(100):
        r = rng.uniform(0.1, 2.0)
        phi = rng.uniform(0.05, np.pi - 0.05)
        psi = rng.uniform(-np.pi, np.pi)
        th = rng.uniform(-np.pi / 2, np.pi / 2)
        y = G.eh_coordinates(r, phi, psi, th)
        assert abs(np.sum(y * y) - 2 * r) < 1e-12
        rr, pp, ps, tt = G.eh_coordinates_inverse(y)
        assert abs(rr - r) < 1e-12
        assert abs(pp - phi) < 1e-12
        assert abs(ps - psi) < 1e-9
        assert abs(tt - th) < 1e-9


def test_eh_coordinates_degenerate_radius():
    with pytest.raises(DegenerateRadius):
        G.eh_coordinates(0.0, 1.0, 1.0, 1.0)
    with pytest.raises(DegenerateRadius):
        G.eh_coordinates_inverse(np.zeros(4))


def test_eh_flat_pullback():
    rng = np.random.default_rng(4)
    for _ in range(10):
        q0 = np.array([rng.uniform(0.3, 1.5), rng.uniform(0.3, 2.8),
                       rng.uniform(0, 2 * np.pi), rng.uniform(0, np.pi)])
        h = 2e-6
        J = np.zeros((4, 4))
        for mu in range(4):
            e = np.zeros(4)
            e[mu] = h
            J[:, mu] = (G.eh_coordinates(*(q0 + e))
                        - G.eh_coordinates(*(q0 - e))) / (2 * h)
        assert np.max(np.abs(J.T @ J - G.flat_model_metric(q0[0], q0[1]))) < 1e-9


def test_eh_chart_matches_gh_through_transition(cfg2):
    m = G.gh_metric(cfg2)
    y0 = np.array([0.31, -0.22, 0.4, 0.12])

    def trans(y):
        x = cfg2.points[0] + G.TaubNutMetric._hopf(y)
        _, _, _, theta = G.eh_coordinates_inverse(y)
        return np.concatenate([x, np.atleast_1d(theta)])

    h = 1e-6
    J = np.zeros((4, 4))
    for mu in range(4):
        e = np.zeros(4)
        e[mu] = h
        J[:, mu] = (trans(y0 + e) - trans(y0 - e)) / (2 * h)
    gh = m.components("gibbons_hawking", trans(y0)[None],
                      gauge=np.zeros((1, 2)))[0]
    eh = m.components("eguchi_hanson:0", y0[None],
                      gauge=np.zeros((1, 2)))[0]
    assert np.max(np.abs(J.T @ gh @ J - eh)) < 1e-8
    assert np.linalg.det(J) < 0  # transition reverses orientation


def test_flat_connection_piece_split(cfg2):
    pt = G.ChartPoint("gibbons_hawking",
                      np.r_[cfg2.points[0] + [0.2, 0.1, 0.15], 0.4])
    gF, alpha = G.flat_connection_piece(cfg2, 0, pt)
    m = G.gh_metric(cfg2)
    g = m.components("gibbons_hawking", pt.coords[None],
                     gauge=np.zeros((1, 2)))[0]
    assert np.max(np.abs(g - (gF + alpha))) < 1e-10


def test_flat_connection_piece_outside_ball(cfg2):
    pt = G.ChartPoint("gibbons_hawking", np.array([5.0, 5.0, 5.0, 0.0]))
    with pytest.raises(OutsideBall):
        G.flat_connection_piece(cfg2, 0, pt)


def test_alpha_limit_near_added_point(cfg2):
    # alpha at |y| = 1e-3 is within 1e-2 of its limit shape
    y = np.array([1e-3, 0.4e-3, -0.3e-3, 0.2e-3])
    y *= 1e-3 / np.linalg.norm(y)
    pt = G.ChartPoint("eguchi_hanson:0", y)
    _, alpha = G.flat_connection_piece(cfg2, 0, pt)
    limit = G.nut_limit_form(cfg2, 0, y)
    assert np.max(np.abs(alpha - limit)) < 1e-2


def test_nut_regular_part_value(cfg2):
    # f_i at the monopole equals 1 + (1/2) sum over the others
    expected = 1.0 + 0.5 / np.linalg.norm(cfg2.points[0] - cfg2.points[1])
    assert G.nut_regular_part(cfg2, 0) == pytest.approx(expected, rel=1e-14)


# --------------------------------------------------------------------------
# almost-complex triple
# --------------------------------------------------------------------------

def test_hyperkahler_identities(cfg2):
    m = G.gh_metric(cfg2)
    rng = np.random.default_rng(11)
    eye = np.eye(4)
    for _ in range(50):
        x = rng.normal(size=3) * 2.0
        if np.min(np.linalg.norm(x - cfg2.points, axis=1)) < 0.35:
            continue
        if np.min(np.hypot(*(x[:2] - cfg2.points[:, :2]).T)) < 0.1:
            continue
        pt = G.ChartPoint("gibbons_hawking", np.r_[x, 0.7])
        J1, J2, J3 = G.hyperkahler_triple(cfg2, pt)
        g = m.components("gibbons_hawking", pt.coords[None],
                         gauge=np.zeros((1, 2)))[0]
        assert np.max(np.abs(J1 @ J1 + eye)) < 1e-10
        assert np.max(np.abs(J2 @ J2 + eye)) < 1e-10
        assert np.max(np.abs(J3 @ J3 + eye)) < 1e-10
        assert np.max(np.abs(J1 @ J2 - J3)) < 1e-10
        assert np.max(np.abs(J1 @ J2 @ J3 + eye)) < 1e-10
        for J in (J1, J2, J3):
            assert np.max(np.abs(J.T @ g @ J - g)) < 1e-10


# --------------------------------------------------------------------------
# reference catalog
# --------------------------------------------------------------------------

def test_reference_catalog_facts():
    cat = G.reference_metrics()
    assert set(cat) == {"flat_r4", "round_s4", "s2xs2", "r2xs2"}
    assert cat["round_s4"].facts["chi"] == 2
    assert cat["r2xs2"].facts["pfaffian"] == 0.0
    flat = cat["flat_r4"].field
    g = flat.components("cartesian", np.zeros((3, 4)))
    assert np.array_equal(g[0], np.eye(4))
