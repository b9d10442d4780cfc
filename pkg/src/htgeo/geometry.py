"""Explicit metric fields: multi-monopole Gibbons-Hawking spaces with their
smoothing charts, and the closed-form reference metrics used as oracles.

Charts
------
``gibbons_hawking``   Cartesian (x1, x2, x3, theta); valid off the monopole
                      points and off the gauge strings of the connection form.
``eguchi_hanson:i``   Smoothing coordinates y in the ball above monopole i;
                      the metric is identity + a smooth correction, regular at
                      the added point y = 0.
``collar``            (rho, phi, psi, theta) with rho = 1/r on the ALF end.

The fiber coordinate theta has period 2*pi.  Gauge strings are handled by a
per-stencil gauge choice (string ray pointing away from the evaluation
center), so curvature quantities are computable everywhere off the monopoles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from .errors import (
    AtMonopole,
    DegenerateRadius,
    OnDiracString,
    OutsideBall,
)

FIBER_PERIOD = 2.0 * np.pi

# Monopole mass coefficient of the harmonic potential (fixed).
MASS = 0.5


def default_layout(k: int) -> np.ndarray:
    """k monopoles on the unit circle of the z = 0 plane."""
    j = np.arange(1, k + 1, dtype=float)
    return np.stack([np.cos(2 * np.pi * j / k),
                     np.sin(2 * np.pi * j / k),
                     np.zeros(k)], axis=1)


@dataclass(frozen=True)
class MonopoleConfig:
    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[1] != 3 or pts.shape[0] < 1:
            raise ValueError("points must be a (k, 3) array")
        d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
        k = pts.shape[0]
        if k > 1 and np.min(d[~np.eye(k, dtype=bool)]) < 1e-12:
            raise ValueError("monopole points must be pairwise distinct")
        object.__setattr__(self, "points", pts)

    @classmethod
    def standard(cls, k: int) -> "MonopoleConfig":
        return cls(default_layout(k))

    @property
    def k(self) -> int:
        return self.points.shape[0]

    @property
    def min_separation(self) -> float:
        if self.k == 1:
            return 2.0
        d = np.linalg.norm(self.points[:, None] - self.points[None, :], axis=-1)
        return float(np.min(d[~np.eye(self.k, dtype=bool)]))

    @property
    def smoothing_radius(self) -> float:
        """Validity radius of the smoothing charts (half the separation)."""
        return min(1.0, 0.5 * self.min_separation)

    @property
    def centroid(self) -> np.ndarray:
        return self.points.mean(axis=0)


@dataclass(frozen=True)
class ChartPoint:
    chart: str
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords",
                           np.asarray(self.coords, dtype=float).reshape(4))


# --------------------------------------------------------------------------
# potential and connection form
# --------------------------------------------------------------------------

def potential(config: MonopoleConfig, x) -> np.ndarray:
    """Harmonic potential 1 + (1/2) sum 1/|x - p_j|."""
    x = np.asarray(x, dtype=float)
    rel = x[..., None, :] - config.points
    r = np.linalg.norm(rel, axis=-1)
    if np.any(r < 1e-12):
        raise AtMonopole("potential evaluated at a monopole point")
    return 1.0 + MASS * np.sum(1.0 / r, axis=-1)


def _omega_terms(config, x, gauge):
    """Per-monopole connection components, (..., k, 3).

    gauge: (k,) array in {-1, 0, +1}; term_j = (cos phi_j - s_j)/2 * dpsi_j.
    s = 0 is the symmetric gauge (strings on both rays), s = +1 regular above,
    s = -1 regular below.
    """
    rel = x[..., None, :] - config.points          # (..., k, 3)
    r = np.linalg.norm(rel, axis=-1)               # (..., k)
    rho2 = rel[..., 0] ** 2 + rel[..., 1] ** 2
    cosphi = rel[..., 2] / r
    pref = MASS * (cosphi - gauge)
    out = np.zeros(rel.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[..., 0] = pref * (-rel[..., 1]) / rho2
        out[..., 1] = pref * rel[..., 0] / rho2
    return out, r, rho2


def connection_form(config: MonopoleConfig, x, gauge="symmetric") -> np.ndarray:
    """Superposed monopole connection 1-form at x, as a 3-covector.

    gauge: "symmetric" (the cos(phi) dpsi / 2 local form), "auto" (string ray
    away from x, per monopole), or an explicit (k,) array of {-1, 0, +1}.
    """
    x = np.asarray(x, dtype=float)
    g = _gauge_signs(config, x, gauge)
    terms, r, rho2 = _omega_terms(config, x, g)
    if np.any(r < 1e-12):
        raise AtMonopole("connection form evaluated at a monopole point")
    if np.any(rho2 < 1e-24):
        raise OnDiracString(
            "point lies on the axis line of a monopole; the coordinate "
            "expression of the connection degenerates there")
    return np.sum(terms, axis=-2)


def _gauge_signs(config, x, gauge):
    if isinstance(gauge, str):
        if gauge == "symmetric":
            return np.zeros(config.k)
        if gauge == "auto":
            z = np.asarray(x)[..., None, 2] - config.points[:, 2]
            return np.where(z >= 0, 1.0, -1.0)
        raise ValueError(f"unknown gauge {gauge!r}")
    g = np.asarray(gauge, dtype=float)
    if g.shape[-1] != config.k:
        raise ValueError("gauge must supply one sign per monopole")
    return g


# --------------------------------------------------------------------------
# metric fields
# --------------------------------------------------------------------------

class MetricField:
    """Chart-based evaluator of 4x4 metric components.

    Subclasses implement `components(chart, coords)` (vectorized over leading
    axes) and may override `batch_evaluator` when stencil evaluations must
    share state with their center point (gauge locking).
    """

    dimension = 4
    charts: tuple = ()

    def orientation(self, chart: str) -> int:
        return 1

    def components(self, chart: str, coords: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def fd_scale(self, chart: str, coords: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        return np.ones(coords.shape[:-1])

    def batch_evaluator(self, chart: str, centers: np.ndarray) -> Callable:
        return lambda pts: self.components(chart, pts)

    def at(self, point: ChartPoint) -> np.ndarray:
        return self.components(point.chart, point.coords[None])[0]


class TaubNutMetric(MetricField):
    """Multi-monopole Gibbons-Hawking metric with smoothing charts."""

    def __init__(self, config: MonopoleConfig):
        self.config = config
        self.charts = ("gibbons_hawking", "collar") + tuple(
            f"eguchi_hanson:{i}" for i in range(config.k))

    # coordinate order (x1, x2, x3, theta) is the positively oriented one;
    # the smoothing-chart transition map reverses it.
    def orientation(self, chart: str) -> int:
        return -1 if chart.startswith("eguchi_hanson") else 1

    # -- gibbons_hawking ---------------------------------------------------

    def _gh_components(self, coords, gauge):
        x = coords[..., :3]
        V = potential(self.config, x)
        terms, _, _ = _omega_terms(self.config, x, gauge)
        om = np.sum(terms, axis=-2)
        g = np.zeros(coords.shape[:-1] + (4, 4))
        Vinv = 1.0 / V
        g[..., :3, :3] = (V[..., None, None] * np.eye(3)
                          + Vinv[..., None, None] * om[..., :, None] * om[..., None, :])
        g[..., :3, 3] = Vinv[..., None] * om
        g[..., 3, :3] = g[..., :3, 3]
        g[..., 3, 3] = Vinv
        return g

    # -- eguchi_hanson -----------------------------------------------------

    @staticmethod
    def _hopf(y):
        """Projection to the 3-space relative coordinates, polynomial in y."""
        y1, y2, y3, y4 = (y[..., i] for i in range(4))
        return np.stack([y1 * y3 + y2 * y4,
                         y2 * y3 - y1 * y4,
                         0.5 * (y1 ** 2 + y2 ** 2 - y3 ** 2 - y4 ** 2)], axis=-1)

    @staticmethod
    def _hopf_jacobian(y):
        """Rows are the pullbacks of dx^a, (..., 3, 4)."""
        y1, y2, y3, y4 = (y[..., i] for i in range(4))
        J = np.empty(y.shape[:-1] + (3, 4))
        J[..., 0, 0], J[..., 0, 1], J[..., 0, 2], J[..., 0, 3] = y3, y4, y1, y2
        J[..., 1, 0], J[..., 1, 1], J[..., 1, 2], J[..., 1, 3] = -y4, y3, y2, -y1
        J[..., 2, 0], J[..., 2, 1], J[..., 2, 2], J[..., 2, 3] = y1, y2, -y3, -y4
        return J

    @staticmethod
    def _fiber_form(y):
        """dtheta + (local monopole connection), smooth off y = 0."""
        y1, y2, y3, y4 = (y[..., i] for i in range(4))
        n2 = np.sum(y * y, axis=-1)
        return np.stack([-y2, y1, -y4, y3], axis=-1) / n2[..., None]

    def _eh_components(self, nut, coords, gauge):
        y = coords
        n2 = np.sum(y * y, axis=-1)
        if np.any(n2 < 1e-24):
            raise AtMonopole("smoothing chart evaluated at its center point")
        p_i = self.config.points[nut]
        x = p_i + self._hopf(y)
        r_i = 0.5 * n2

        others = [j for j in range(self.config.k) if j != nut]
        V = 1.0 / n2 + 1.0  # V_i + the constant term
        beta3 = np.zeros(y.shape[:-1] + (3,))
        if others:
            sub = MonopoleConfig(self.config.points[others])
            V = V + (potential(sub, x) - 1.0)
            terms, _, _ = _omega_terms(sub, x, gauge[..., others])
            beta3 = np.sum(terms, axis=-2)
        f = V - 1.0 / n2  # V - V_i, smooth across the center

        J = self._hopf_jacobian(y)
        eta = self._fiber_form(y)
        beta = np.einsum("...a,...am->...m", beta3, J)

        alpha = np.einsum("...am,...an->...mn", J, J) * f[..., None, None]
        # -(f/(V V_i)) eta x eta, written to stay smooth at the center
        c = f * n2 / V
        alpha -= c[..., None, None] * eta[..., :, None] * eta[..., None, :]
        Vinv = 1.0 / V
        alpha += Vinv[..., None, None] * (
            beta[..., :, None] * beta[..., None, :]
            + eta[..., :, None] * beta[..., None, :]
            + beta[..., :, None] * eta[..., None, :])
        del r_i
        return np.eye(4) + alpha

    # -- collar ------------------------------------------------------------

    def _collar_components(self, coords, gauge):
        rho, phi, psi = coords[..., 0], coords[..., 1], coords[..., 2]
        if np.any(rho <= 0):
            raise DegenerateRadius("collar chart needs rho > 0")
        r = 1.0 / rho
        sp, cp = np.sin(phi), np.cos(phi)
        ss, cs = np.sin(psi), np.cos(psi)
        x = np.stack([r * sp * cs, r * sp * ss, r * cp], axis=-1)
        J = np.zeros(coords.shape[:-1] + (4, 4))
        J[..., 0, 0] = -sp * cs / rho ** 2
        J[..., 1, 0] = -sp * ss / rho ** 2
        J[..., 2, 0] = -cp / rho ** 2
        J[..., 0, 1] = r * cp * cs
        J[..., 1, 1] = r * cp * ss
        J[..., 2, 1] = -r * sp
        J[..., 0, 2] = -r * sp * ss
        J[..., 1, 2] = r * sp * cs
        J[..., 3, 3] = 1.0
        gh = self._gh_components(
            np.concatenate([x, coords[..., 3:]], axis=-1), gauge)
        return np.einsum("...am,...ab,...bn->...mn", J, gh, J)

    # -- dispatch ----------------------------------------------------------

    def _parse_chart(self, chart):
        if chart == "gibbons_hawking" or chart == "collar":
            return chart, None
        if chart.startswith("eguchi_hanson:"):
            nut = int(chart.split(":", 1)[1])
            if not 0 <= nut < self.config.k:
                raise ValueError(f"no monopole {nut}")
            return "eguchi_hanson", nut
        raise ValueError(f"unknown chart {chart!r}")

    def components(self, chart, coords, gauge=None):
        coords = np.asarray(coords, dtype=float)
        kind, nut = self._parse_chart(chart)
        if gauge is None:
            gauge = self._auto_gauge(kind, nut, coords)
        if kind == "gibbons_hawking":
            return self._gh_components(coords, gauge)
        if kind == "collar":
            return self._collar_components(coords, gauge)
        return self._eh_components(nut, coords, gauge)

    def _auto_gauge(self, kind, nut, coords):
        if kind == "gibbons_hawking":
            x = coords[..., :3]
        elif kind == "collar":
            rho, phi, psi = coords[..., 0], coords[..., 1], coords[..., 2]
            r = 1.0 / rho
            x = np.stack([r * np.sin(phi) * np.cos(psi),
                          r * np.sin(phi) * np.sin(psi),
                          r * np.cos(phi)], axis=-1)
        else:
            x = self.config.points[nut] + self._hopf(coords)
        z = x[..., None, 2] - self.config.points[:, 2]
        return np.where(z >= 0, 1.0, -1.0)

    def batch_evaluator(self, chart, centers):
        """Stencil evaluator with the gauge locked to the center points."""
        kind, nut = self._parse_chart(chart)
        centers = np.asarray(centers, dtype=float)
        gauge = self._auto_gauge(kind, nut, centers)  # (N, k)

        def evaluate(pts):
            g = gauge
            extra = pts.ndim - centers.ndim
            for _ in range(extra):
                g = g[:, None]
            return self.components(chart, pts, gauge=np.broadcast_to(
                g, pts.shape[:-1] + (self.config.k,)))

        return evaluate

    def fd_scale(self, chart, coords):
        coords = np.asarray(coords, dtype=float)
        kind, nut = self._parse_chart(chart)
        if kind == "gibbons_hawking":
            rel = coords[..., None, :3] - self.config.points
            rmin = np.min(np.linalg.norm(rel, axis=-1), axis=-1)
            return np.clip(0.4 * rmin, 1e-3, 4.0)
        if kind == "collar":
            return np.clip(0.2 * coords[..., 0], 1e-6, 0.1)
        n = np.linalg.norm(coords, axis=-1)
        return np.clip(0.5 * n, 5e-3, 0.5)


def gh_metric(config: MonopoleConfig) -> TaubNutMetric:
    """Metric field of the multi-monopole space (all charts)."""
    return TaubNutMetric(config)


# --------------------------------------------------------------------------
# smoothing coordinates
# --------------------------------------------------------------------------

def eh_coordinates(r, phi, psi, theta) -> np.ndarray:
    """Map (r, phi, psi, theta) to the smoothing coordinates y (|y|^2 = 2r)."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DegenerateRadius("smoothing coordinates need r > 0")
    s = np.sqrt(2.0 * r)
    a = np.asarray(theta) + np.asarray(psi) / 2.0
    b = np.asarray(theta) - np.asarray(psi) / 2.0
    half = np.asarray(phi) / 2.0
    return np.stack([s * np.cos(half) * np.cos(a),
                     s * np.cos(half) * np.sin(a),
                     s * np.sin(half) * np.cos(b),
                     s * np.sin(half) * np.sin(b)], axis=-1)


def eh_coordinates_inverse(y) -> tuple:
    """Inverse of `eh_coordinates` away from the axis degeneracies."""
    y = np.asarray(y, dtype=float)
    n2 = np.sum(y * y, axis=-1)
    if np.any(n2 <= 0):
        raise DegenerateRadius("smoothing coordinates need |y| > 0")
    r = 0.5 * n2
    m12 = np.hypot(y[..., 0], y[..., 1])
    m34 = np.hypot(y[..., 2], y[..., 3])
    phi = 2.0 * np.arctan2(m34, m12)
    a = np.arctan2(y[..., 1], y[..., 0])
    b = np.arctan2(y[..., 3], y[..., 2])
    theta = 0.5 * (a + b)
    psi = a - b
    return r, phi, psi, theta


def flat_model_metric(r, phi):
    """Closed-form components of the flat piece in (r, phi, psi, theta)."""
    r = np.asarray(r, dtype=float)
    phi = np.asarray(phi, dtype=float)
    g = np.zeros(np.broadcast(r, phi).shape + (4, 4))
    g[..., 0, 0] = 1.0 / (2.0 * r)
    g[..., 1, 1] = r / 2.0
    g[..., 2, 2] = r / 2.0
    g[..., 3, 3] = 2.0 * r
    g[..., 2, 3] = g[..., 3, 2] = r * np.cos(phi)
    return g


def nut_regular_part(config: MonopoleConfig, i: int, x=None) -> np.ndarray:
    """V - 1/(2 r_i): smooth across monopole i; defaults to its value there."""
    p = config.points[i]
    if x is None:
        x = p
    x = np.asarray(x, dtype=float)
    others = [j for j in range(config.k) if j != i]
    val = np.ones(x.shape[:-1])
    for j in others:
        val = val + MASS / np.linalg.norm(x - config.points[j], axis=-1)
    return val


def flat_connection_piece(config: MonopoleConfig, i: int, point: ChartPoint):
    """Split g = g_flat + alpha near monopole i, in the point's chart.

    In the gibbons_hawking chart the flat piece is the single-monopole ansatz
    of monopole i (symmetric gauge); in the smoothing chart it is the identity.
    """
    metric = TaubNutMetric(config)
    delta = config.smoothing_radius
    if point.chart == "gibbons_hawking":
        x = point.coords[:3]
        r_i = np.linalg.norm(x - config.points[i])
        if r_i > delta:
            raise OutsideBall(f"point is {r_i:.3f} from monopole {i}, "
                              f"ball radius {delta:.3f}")
        single = MonopoleConfig(config.points[i][None, :])
        Vi = MASS / r_i
        om_i = connection_form(single, x)
        gF = np.zeros((4, 4))
        gF[:3, :3] = Vi * np.eye(3) + (om_i[:, None] * om_i[None, :]) / Vi
        gF[:3, 3] = gF[3, :3] = om_i / Vi
        gF[3, 3] = 1.0 / Vi
        gauge = np.zeros(config.k)  # symmetric gauge matches the local form
        g = metric.components("gibbons_hawking", point.coords[None],
                              gauge=gauge[None])[0]
        return gF, g - gF
    if point.chart == f"eguchi_hanson:{i}":
        y = point.coords
        if 0.5 * np.sum(y * y) > delta:
            raise OutsideBall("point is outside the smoothing ball")
        g = metric.components(point.chart, y[None],
                              gauge=np.zeros((1, config.k)))[0]
        return np.eye(4), g - np.eye(4)
    raise ValueError(f"unsupported chart {point.chart!r} for the split")


def nut_limit_form(config: MonopoleConfig, i: int, y) -> np.ndarray:
    """Limit shape of alpha near the added point: f_i(p_i) * pullback of the
    flat 3-metric, evaluated at y."""
    f0 = float(nut_regular_part(config, i))
    J = TaubNutMetric._hopf_jacobian(np.asarray(y, dtype=float))
    return f0 * np.einsum("...am,...an->...mn", J, J)


# --------------------------------------------------------------------------
# hyper-Kahler triple
# --------------------------------------------------------------------------

def hyperkahler_triple(config: MonopoleConfig, point: ChartPoint):
    """Three compatible almost-complex structures at a gibbons_hawking point,
    as tangent-space matrices.

    The first maps dx1 to the rescaled fiber form and dx2 to dx3 on the
    coframe; the second is its cyclic shift; the third is their product,
    closing the quaternion relations J1 J2 = J3, J1 J2 J3 = -Id.  Components
    use the symmetric connection gauge.
    """
    if point.chart != "gibbons_hawking":
        raise ValueError("the triple is assembled in the gibbons_hawking chart")
    x = point.coords[:3]
    V = float(potential(config, x))
    om = connection_form(config, x, gauge="symmetric")
    eta = np.array([om[0], om[1], om[2], 1.0]) / V

    def cotangent(axis, t, s):
        # dx^a -> t*eta, dx^b -> s*dx^c (a,b,c cyclic); dtheta = V eta - omega
        b, c = (axis + 1) % 3, (axis + 2) % 3
        K = np.zeros((4, 4))
        K[:, axis] = t * eta
        K[c, b] = s
        K[b, c] = -s
        K[:, 3] = -t * V * np.eye(4)[axis] - t * om[axis] * eta
        K[c, 3] -= s * om[b]
        K[b, 3] += s * om[c]
        return K

    J1 = cotangent(0, 1, 1).T
    J2 = cotangent(1, 1, 1).T
    J3 = cotangent(2, -1, -1).T
    return J1, J2, J3


# --------------------------------------------------------------------------
# reference metrics
# --------------------------------------------------------------------------

class _ConstantCallableMetric(MetricField):
    def __init__(self, fn, charts=("cartesian",), scale=1.0, name=""):
        self._fn = fn
        self.charts = charts
        self._scale = scale
        self.name = name

    def components(self, chart, coords):
        coords = np.asarray(coords, dtype=float)
        return self._fn(coords)

    def fd_scale(self, chart, coords):
        coords = np.asarray(coords, dtype=float)
        return np.full(coords.shape[:-1], self._scale)


def _flat_components(coords):
    return np.broadcast_to(np.eye(4), coords.shape[:-1] + (4, 4)).copy()


def _sphere4_components(radius):
    def fn(coords):
        conf = (2.0 * radius ** 2 / (radius ** 2 + np.sum(coords ** 2, axis=-1))) ** 2
        return conf[..., None, None] * np.eye(4)
    return fn


def _s2xs2_components(a, b):
    def fn(coords):
        g = np.zeros(coords.shape[:-1] + (4, 4))
        g[..., 0, 0] = a ** 2
        g[..., 1, 1] = a ** 2 * np.sin(coords[..., 0]) ** 2
        g[..., 2, 2] = b ** 2
        g[..., 3, 3] = b ** 2 * np.sin(coords[..., 2]) ** 2
        return g
    return fn


def _r2xs2_components(b):
    def fn(coords):
        g = np.zeros(coords.shape[:-1] + (4, 4))
        g[..., 0, 0] = 1.0
        g[..., 1, 1] = 1.0
        g[..., 2, 2] = b ** 2
        g[..., 3, 3] = b ** 2 * np.sin(coords[..., 2]) ** 2
        return g
    return fn


@dataclass(frozen=True)
class ReferenceMetric:
    name: str
    field: MetricField
    facts: dict


def reference_metrics() -> Dict[str, ReferenceMetric]:
    """Closed-form oracle metrics with their known invariants."""
    cat = {}
    cat["flat_r4"] = ReferenceMetric(
        "flat_r4",
        _ConstantCallableMetric(_flat_components, ("cartesian",), 1.0, "flat_r4"),
        {"chi": 0, "scalar": 0.0, "flat": True},
    )
    cat["round_s4"] = ReferenceMetric(
        "round_s4",
        _ConstantCallableMetric(_sphere4_components(1.0), ("stereographic",),
                                0.5, "round_s4"),
        {"chi": 2, "scalar": 12.0, "volume": 8 * np.pi ** 2 / 3},
    )
    cat["s2xs2"] = ReferenceMetric(
        "s2xs2",
        _ConstantCallableMetric(_s2xs2_components(1.0, 1.0), ("angles",),
                                0.2, "s2xs2"),
        {"chi": 4, "tau": 0, "scalar": 4.0},
    )
    cat["r2xs2"] = ReferenceMetric(
        "r2xs2",
        _ConstantCallableMetric(_r2xs2_components(1.0), ("mixed",),
                                0.2, "r2xs2"),
        {"chi": 2, "scalar": 2.0, "pfaffian": 0.0},
    )
    return cat
