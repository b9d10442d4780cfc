"""Finite-difference tensor calculus on a metric field.

Central second-order differences of the metric components give Christoffel
symbols, the Riemann tensor, and its block decomposition into self-dual and
anti-self-dual Weyl operators, traceless Ricci and scalar curvature.  The
characteristic 4-form densities (Euler/Pfaffian, first Pontryagin, Hirzebruch
L) are each computed along two independent routes that must agree.

Norm conventions: |W+|^2 and |W-|^2 are Frobenius norms of the 3x3 blocks of
the curvature operator on 2-forms; |Z|^2 is half the naive component sum of
the traceless Ricci tensor (its operator normalization), so that the Euler
density reads (|W+|^2 + |W-|^2 - |Z|^2 + S^2/24) / (8 pi^2) and the signature
integrand (|W+|^2 - |W-|^2) / (12 pi^2).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Callable, Optional

import numpy as np

from .errors import RouteMismatch, SingularMetric
from .geometry import ChartPoint, MetricField

DEFAULT_STEP_FACTOR = 1e-4
CONDITION_LIMIT = 1e10

# self-dual / anti-self-dual 2-form basis: (e0^e1 +- e2^e3) / sqrt2 and cyclic
PAIRS = ((0, 1), (0, 2), (0, 3), (2, 3), (3, 1), (1, 2))


def _levi_civita4():
    eps = np.zeros((4, 4, 4, 4))
    for perm in permutations(range(4)):
        sign = 1
        p = list(perm)
        for i in range(4):
            for j in range(i + 1, 4):
                if p[i] > p[j]:
                    sign = -sign
        eps[perm] = sign
    return eps


EPS4 = _levi_civita4()
_EPS4_NONZERO = tuple(
    (a, b, c, d, EPS4[a, b, c, d])
    for a in range(4) for b in range(4) for c in range(4) for d in range(4)
    if EPS4[a, b, c, d] != 0.0
)


def _eps_pair_contract(t: np.ndarray) -> np.ndarray:
    """out[..., e, f] = sum_{gh} eps_{efgh} t[..., g, h] on the last two axes."""
    out = np.zeros_like(t)
    for e, f, g, h, s in _EPS4_NONZERO:
        if s > 0:
            out[..., e, f] += t[..., g, h]
        else:
            out[..., e, f] -= t[..., g, h]
    return out


def _eps_left_contract(t: np.ndarray) -> np.ndarray:
    """out[..., a, b, :, :] = sum_{cd} eps_{abcd} t[..., c, d, :, :]."""
    out = np.zeros_like(t)
    for a, b, c, d, s in _EPS4_NONZERO:
        if s > 0:
            out[..., a, b, :, :] += t[..., c, d, :, :]
        else:
            out[..., a, b, :, :] -= t[..., c, d, :, :]
    return out

_BASIS_MIX = np.zeros((6, 6))
_BASIS_MIX[:3, :3] = np.eye(3)
_BASIS_MIX[:3, 3:] = np.eye(3)
_BASIS_MIX[3:, :3] = np.eye(3)
_BASIS_MIX[3:, 3:] = -np.eye(3)
_BASIS_MIX /= np.sqrt(2.0)


# --------------------------------------------------------------------------
# batched cores
# --------------------------------------------------------------------------

def _check_invertible(g, cond_limit=CONDITION_LIMIT):
    n1 = np.abs(g).sum(axis=-1).max(axis=-1)
    ginv = np.linalg.inv(g)
    n2 = np.abs(ginv).sum(axis=-1).max(axis=-1)
    if np.any(n1 * n2 > cond_limit):
        raise SingularMetric("metric conditioning exceeds the threshold")
    return ginv


def christoffel_batch(f: Callable, centers: np.ndarray, h: np.ndarray,
                      cond_limit=CONDITION_LIMIT):
    """Gamma^a_{bc} by central differences.

    f maps (..., 4) points to (..., 4, 4) metric components; h broadcasts over
    the leading axes of centers.
    """
    centers = np.asarray(centers, dtype=float)
    h = np.broadcast_to(np.asarray(h, dtype=float), centers.shape[:-1])
    offs = np.concatenate([np.zeros((1, 4)), np.eye(4), -np.eye(4)])  # (9, 4)
    pts = centers[..., None, :] + h[..., None, None] * offs
    g = f(pts)                                   # (..., 9, 4, 4)
    g0 = g[..., 0, :, :]
    ginv = _check_invertible(g0, cond_limit)
    dg = (g[..., 1:5, :, :] - g[..., 5:9, :, :]) / (2.0 * h[..., None, None, None])
    # dg[..., m, a, b] = d_m g_{ab}
    lead = range(dg.ndim - 3)
    term = (dg
            + dg.transpose(*lead, -1, -3, -2)
            - dg.transpose(*lead, -2, -1, -3))
    # term[..., b, c, v] = d_b g_{cv} + d_c g_{vb} - d_v g_{bc}
    t = np.ascontiguousarray(term.reshape(term.shape[:-3] + (16, 4)))
    gamma = 0.5 * (t @ ginv.swapaxes(-1, -2))
    gamma = gamma.reshape(term.shape[:-3] + (4, 4, 4))
    # gamma[..., b, c, a] -> gamma[..., a, b, c] = Gamma^a_{bc}
    lead = range(gamma.ndim - 3)
    gamma = np.ascontiguousarray(gamma.transpose(*lead, -1, -3, -2))
    return gamma, g0, ginv


def riemann_batch(f: Callable, centers: np.ndarray, h: np.ndarray,
                  cond_limit=CONDITION_LIMIT):
    """R^a_{b mu nu}, lowered tensor, Ricci, scalar at the centers."""
    centers = np.asarray(centers, dtype=float)
    h = np.broadcast_to(np.asarray(h, dtype=float), centers.shape[:-1])
    gamma0, g0, ginv = christoffel_batch(f, centers, h, cond_limit)
    dgam = np.empty(centers.shape[:-1] + (4, 4, 4, 4))
    for mu in range(4):
        e = np.zeros(4)
        e[mu] = 1.0
        gp, _, _ = christoffel_batch(f, centers + h[..., None] * e, h,
                                     cond_limit)
        gm, _, _ = christoffel_batch(f, centers - h[..., None] * e, h,
                                     cond_limit)
        dgam[..., mu, :, :, :] = (gp - gm) / (2.0 * h[..., None, None, None])
    # R^a_{b mu nu} = d_mu G^a_{nu b} - d_nu G^a_{mu b} + G G - G G
    t1 = dgam.transpose(*range(dgam.ndim - 4), -3, -1, -4, -2)
    # t1[..., a, b, mu, nu] = dgam[..., mu, a, nu, b]
    quad = np.einsum("...aml,...lvb->...abmv", gamma0, gamma0)
    riem_up = t1 - t1.swapaxes(-2, -1) + quad - quad.swapaxes(-2, -1)
    ricci = np.einsum("...abav->...bv", riem_up)
    scalar = np.einsum("...bv,...bv->...", ginv, ricci)
    riem_low = np.einsum("...al,...lbmv->...abmv", g0, riem_up)
    return riem_up, riem_low, ricci, scalar, g0, ginv


def orthonormal_frame(g: np.ndarray, orientation: int = 1) -> np.ndarray:
    """Modified Gram-Schmidt frame, columns Lambda[..., mu, a].

    Pivot order is the coordinate order; with orientation = -1 the last leg is
    negated so the returned frame is always positively oriented.
    """
    n = g.shape[-1]
    lam = np.zeros_like(g)
    basis = np.eye(n)
    for a in range(n):
        v = np.broadcast_to(basis[a], g.shape[:-2] + (n,)).copy()
        for b in range(a):
            prev = lam[..., :, b]
            coef = np.einsum("...m,...mv,...v->...", prev, g, v)
            v = v - coef[..., None] * prev
        norm2 = np.einsum("...m,...mv,...v->...", v, g, v)
        if np.any(norm2 <= 0):
            raise SingularMetric("metric is not positive definite")
        lam[..., :, a] = v / np.sqrt(norm2)[..., None]
    if orientation < 0:
        lam = lam.copy()
        lam[..., :, n - 1] *= -1.0
    return lam


@dataclass
class BatchCurvature:
    """Curvature data for a batch of points, all arrays leading-axis aligned."""

    metric: np.ndarray
    metric_inv: np.ndarray
    riemann_up: np.ndarray
    riemann_low: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray
    frame: np.ndarray
    riemann_frame: np.ndarray
    operator6: np.ndarray
    wplus: np.ndarray
    wminus: np.ndarray
    bblock: np.ndarray
    traceless_ricci: np.ndarray
    step: np.ndarray


def curvature_batch(metric: MetricField, chart: str, coords: np.ndarray,
                    step=None) -> BatchCurvature:
    coords = np.asarray(coords, dtype=float)
    if step is None:
        h = DEFAULT_STEP_FACTOR * metric.fd_scale(chart, coords)
    else:
        h = np.broadcast_to(np.asarray(step, dtype=float), coords.shape[:-1])
    f = metric.batch_evaluator(chart, coords)
    riem_up, riem_low, ricci, scalar, g0, ginv = riemann_batch(f, coords, h)

    lam = orthonormal_frame(g0, metric.orientation(chart))
    rf = _frame_transform4(lam, riem_low)

    n = coords.shape[:-1]
    op6 = np.empty(n + (6, 6))
    for A, (i, j) in enumerate(PAIRS):
        for B, (k, l) in enumerate(PAIRS):
            op6[..., A, B] = rf[..., i, j, k, l]
    rpm = np.einsum("ab,...bc,dc->...ad", _BASIS_MIX, op6, _BASIS_MIX)
    ablock = rpm[..., :3, :3]
    cblock = rpm[..., 3:, 3:]
    bblock = rpm[..., :3, 3:]
    tra = np.einsum("...ii->...", ablock)
    trc = np.einsum("...ii->...", cblock)
    wplus = ablock - (tra / 3.0)[..., None, None] * np.eye(3)
    wminus = cblock - (trc / 3.0)[..., None, None] * np.eye(3)

    z = ricci - (scalar / 4.0)[..., None, None] * g0
    return BatchCurvature(
        metric=g0, metric_inv=ginv,
        riemann_up=riem_up, riemann_low=riem_low,
        ricci=ricci, scalar=scalar,
        frame=lam, riemann_frame=rf, operator6=op6,
        wplus=wplus, wminus=wminus, bblock=bblock,
        traceless_ricci=z, step=np.broadcast_to(h, n),
    )


# --------------------------------------------------------------------------
# densities
# --------------------------------------------------------------------------

def _frame_transform(lam, tensor2):
    return lam.swapaxes(-1, -2) @ tensor2 @ lam


def _frame_transform4(lam, riem_low):
    """Lambda^4-transform of the lowered curvature, via batched matmuls.

    Each round contracts the last tensor index with the frame and cycles it
    to the front; after four rounds the index order is restored.
    """
    lead = riem_low.ndim - 4
    lamb = lam[..., None, None, :, :]
    t = riem_low
    for _ in range(4):
        t = np.moveaxis(t @ lamb, -1, lead)
    return np.ascontiguousarray(t)


def density_fields(bc: BatchCurvature) -> dict:
    """Pointwise curvature norms and characteristic densities.

    Returns both routes for the Euler and L densities: the block-norm route
    and the Pfaffian / Pontryagin-polynomial route on frame curvature forms.
    """
    w2p = np.einsum("...ij,...ij->...", bc.wplus, bc.wplus)
    w2m = np.einsum("...ij,...ij->...", bc.wminus, bc.wminus)
    zf = _frame_transform(bc.frame, bc.traceless_ricci)
    z2 = 0.5 * np.einsum("...ab,...ab->...", zf, zf)
    s2 = bc.scalar ** 2
    pi2 = np.pi ** 2

    euler_norms = (w2p + w2m - z2 + s2 / 24.0) / (8.0 * pi2)
    l_norms = (w2p - w2m) / (12.0 * pi2)

    rf = bc.riemann_frame
    k1 = _eps_pair_contract(rf)          # sum_gh eps_{efgh} R_{cdgh}
    k2 = _eps_left_contract(k1)          # sum_cd eps_{abcd} k1_{cdef}
    euler_pf = np.einsum("...abef,...abef->...", rf, k2) / (128.0 * pi2)
    q1 = _eps_pair_contract(rf.swapaxes(-4, -3))  # sum_ef eps_{cdef} R_{baef}
    p1 = -np.einsum("...abcd,...abcd->...", rf, q1) / (32.0 * pi2)
    l_poly = p1 / 3.0

    ricf = _frame_transform(bc.frame, bc.ricci)
    ric2 = np.einsum("...ab,...ab->...", ricf, ricf)
    return {
        "euler": euler_norms,
        "euler_pfaffian": euler_pf,
        "l": l_norms,
        "l_polynomial": l_poly,
        "p1": p1,
        "w2_plus": w2p,
        "w2_minus": w2m,
        "z2": z2,
        "s2": s2,
        "ricci_frobenius": np.sqrt(np.abs(ric2)),
    }


def characteristic_densities(metric: MetricField, chart: str, coords,
                             step=None, chunk: int = 4096) -> dict:
    """density_fields over a batch, chunked to bound memory."""
    coords = np.asarray(coords, dtype=float)
    flat = coords.reshape(-1, 4)
    outs = []
    for lo in range(0, flat.shape[0], chunk):
        sl = flat[lo:lo + chunk]
        st = None
        if step is not None:
            st = np.broadcast_to(np.asarray(step, dtype=float),
                                 coords.shape[:-1]).reshape(-1)[lo:lo + chunk]
        outs.append(density_fields(curvature_batch(metric, chart, sl, st)))
    keys = outs[0].keys()
    merged = {k: np.concatenate([o[k] for o in outs]) for k in keys}
    return {k: v.reshape(coords.shape[:-1]) for k, v in merged.items()}


# --------------------------------------------------------------------------
# block reassembly (decomposition consistency)
# --------------------------------------------------------------------------

def reassembled_operator(bc: BatchCurvature) -> np.ndarray:
    """Rebuild the 6x6 curvature operator from (W+, W-, Z, S).

    The off-diagonal block is regenerated from the traceless Ricci tensor in
    the frame, B[i,j] = (Z[pi, pj] + Z[qi, qj] - Z[qi, pj]...)/2 pattern via
    the pair bases; used to check that the stored blocks and the displayed
    decomposition agree.
    """
    n = bc.scalar.shape
    zf = _frame_transform(bc.frame, bc.traceless_ricci)
    b = np.zeros(n + (3, 3))
    for i in range(3):
        pi, qi = PAIRS[i], PAIRS[3 + i]
        for j in range(3):
            pj, qj = PAIRS[j], PAIRS[3 + j]
            # <(KN(Z)/2) sigma+_i, sigma-_j> on the pair bases
            b[..., i, j] = 0.25 * (_kn_pair(zf, *pi, *pj)
                                   - _kn_pair(zf, *pi, *qj)
                                   + _kn_pair(zf, *qi, *pj)
                                   - _kn_pair(zf, *qi, *qj))
    s = bc.scalar
    op = np.zeros(n + (6, 6))
    op[..., :3, :3] = bc.wplus + (s / 12.0)[..., None, None] * np.eye(3)
    op[..., 3:, 3:] = bc.wminus + (s / 12.0)[..., None, None] * np.eye(3)
    op[..., :3, 3:] = b
    op[..., 3:, :3] = np.swapaxes(b, -1, -2)
    return np.einsum("ab,...bc,dc->...ad", _BASIS_MIX, op, _BASIS_MIX)


def _kn_pair(z, a, b, c, d):
    """(Z kn delta)_{abcd} with kn the Kulkarni-Nomizu product, frame indices."""
    delta = np.eye(4)
    return (z[..., a, c] * delta[b, d] + z[..., b, d] * delta[a, c]
            - z[..., a, d] * delta[b, c] - z[..., b, c] * delta[a, d])


# --------------------------------------------------------------------------
# single-point operations
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ChristoffelData:
    symbols: np.ndarray          # Gamma^a_{bc}
    step: float
    asymmetry_residual: float    # max |Gamma^a_{bc} - Gamma^a_{cb}|


@dataclass(frozen=True)
class CurvatureBundle:
    riemann: np.ndarray          # R^a_{b mu nu}
    riemann_lowered: np.ndarray
    ricci: np.ndarray
    scalar: float
    weyl_plus: np.ndarray        # 3x3 trace-free block
    weyl_minus: np.ndarray
    traceless_ricci: np.ndarray
    frame: np.ndarray
    step: float


@dataclass(frozen=True)
class CharacteristicForms:
    euler_density: float
    p1_density: float
    L_density: float
    sd_asd_densities: tuple      # (|W+|^2, |W-|^2, |Z|^2, S^2)


def _step_of(metric, point, step):
    if step is not None:
        return float(step)
    return float(DEFAULT_STEP_FACTOR
                 * metric.fd_scale(point.chart, point.coords[None])[0])


def christoffel(metric: MetricField, point: ChartPoint,
                step: Optional[float] = None) -> ChristoffelData:
    h = _step_of(metric, point, step)
    f = metric.batch_evaluator(point.chart, point.coords[None])
    gamma, _, _ = christoffel_batch(f, point.coords[None], np.array([h]))
    sym = 0.5 * (gamma + gamma.swapaxes(-1, -2))
    resid = float(np.max(np.abs(gamma - gamma.swapaxes(-1, -2))))
    return ChristoffelData(symbols=sym[0], step=h, asymmetry_residual=resid)


def riemann(metric: MetricField, point: ChartPoint,
            step: Optional[float] = None) -> CurvatureBundle:
    h = _step_of(metric, point, step)
    bc = curvature_batch(metric, point.chart, point.coords[None], h)
    return CurvatureBundle(
        riemann=bc.riemann_up[0],
        riemann_lowered=bc.riemann_low[0],
        ricci=bc.ricci[0],
        scalar=float(bc.scalar[0]),
        weyl_plus=bc.wplus[0],
        weyl_minus=bc.wminus[0],
        traceless_ricci=bc.traceless_ricci[0],
        frame=bc.frame[0],
        step=h,
    )


def weyl_duality_defect(metric: MetricField, point: ChartPoint,
                        step: Optional[float] = None) -> tuple:
    """Frobenius norms (|W+|, |W-|) of the two Weyl blocks."""
    h = _step_of(metric, point, step)
    bc = curvature_batch(metric, point.chart, point.coords[None], h)
    d = density_fields(bc)
    return float(np.sqrt(d["w2_plus"][0])), float(np.sqrt(d["w2_minus"][0]))


def euler_density(metric: MetricField, point: ChartPoint,
                  step: Optional[float] = None,
                  route_tolerance: float = 1e-5) -> float:
    """Euler 4-form coefficient; Pfaffian and block-norm routes must agree."""
    h = _step_of(metric, point, step)
    bc = curvature_batch(metric, point.chart, point.coords[None], h)
    d = density_fields(bc)
    a, b = float(d["euler"][0]), float(d["euler_pfaffian"][0])
    scale = max(abs(a), abs(b), 1e-9)
    if abs(a - b) > route_tolerance * scale:
        raise RouteMismatch(
            f"euler density routes disagree: norms {a:.3e} pfaffian {b:.3e}")
    return a


def L_density(metric: MetricField, point: ChartPoint,
              step: Optional[float] = None,
              route_tolerance: float = 1e-4) -> float:
    """L 4-form coefficient via the Weyl norms, cross-checked against p1/3."""
    h = _step_of(metric, point, step)
    bc = curvature_batch(metric, point.chart, point.coords[None], h)
    d = density_fields(bc)
    a, b = float(d["l"][0]), float(d["l_polynomial"][0])
    scale = max(abs(a), abs(b), 1e-9)
    if abs(a - b) > route_tolerance * scale:
        raise RouteMismatch(
            f"L density routes disagree: norms {a:.3e} polynomial {b:.3e}")
    return a


def make_density(metric: MetricField, keys=("euler", "l"),
                 step=None) -> Callable:
    """Pointwise evaluator (chart, coords) -> (..., len(keys)) for quadrature."""
    keys = tuple(keys)

    def density(chart, coords):
        d = characteristic_densities(metric, chart, coords, step=step)
        return np.stack([d[k] for k in keys], axis=-1)

    return density
