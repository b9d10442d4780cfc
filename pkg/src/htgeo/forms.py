"""Small exterior-algebra calculator: differential forms with float
coefficients over an n-dimensional coordinate basis, plus the invariant
polynomials (Pfaffian, Pontryagin classes, the degree-8 L-polynomial) acting
on matrices of forms.

Forms are dicts keyed by strictly increasing index tuples.  This is a desk
tool used for cross-checks and the density-level high-dimension identities,
not a performance path.
"""

from __future__ import annotations

from itertools import combinations, permutations
from math import pi

import numpy as np


def _sort_sign(idx):
    """(sorted tuple, permutation sign) or (None, 0) on a repeated index."""
    idx = list(idx)
    sign = 1
    for i in range(len(idx)):
        for j in range(len(idx) - 1 - i):
            if idx[j] > idx[j + 1]:
                idx[j], idx[j + 1] = idx[j + 1], idx[j]
                sign = -sign
            elif idx[j] == idx[j + 1]:
                return None, 0
    return tuple(idx), sign


class Form:
    """Exterior form of homogeneous degree over coordinates 0..n-1."""

    __slots__ = ("n", "degree", "comps")

    def __init__(self, n, degree, comps=None):
        self.n = n
        self.degree = degree
        self.comps = dict(comps or {})

    @classmethod
    def zero(cls, n, degree):
        return cls(n, degree)

    @classmethod
    def basis(cls, n, *idx):
        key, sign = _sort_sign(idx)
        if key is None:
            return cls(n, len(idx))
        return cls(n, len(idx), {key: float(sign)})

    def copy(self):
        return Form(self.n, self.degree, self.comps)

    def set(self, idx, value):
        key, sign = _sort_sign(idx)
        if key is None:
            raise ValueError("repeated index")
        self.comps[key] = sign * float(value)
        return self

    def get(self, *idx):
        key, sign = _sort_sign(idx)
        if key is None:
            return 0.0
        return sign * self.comps.get(key, 0.0)

    def __add__(self, other):
        if other == 0:
            return self.copy()
        if self.degree != other.degree:
            raise ValueError("degree mismatch")
        out = dict(self.comps)
        for k, v in other.comps.items():
            out[k] = out.get(k, 0.0) + v
        return Form(self.n, self.degree, out)

    __radd__ = __add__

    def __mul__(self, c):
        return Form(self.n, self.degree,
                    {k: v * c for k, v in self.comps.items()})

    __rmul__ = __mul__

    def __sub__(self, other):
        return self + other * (-1.0)

    def wedge(self, other):
        out = {}
        for k1, v1 in self.comps.items():
            for k2, v2 in other.comps.items():
                key, sign = _sort_sign(k1 + k2)
                if key is None:
                    continue
                out[key] = out.get(key, 0.0) + sign * v1 * v2
        return Form(self.n, self.degree + other.degree, out)

    def norm(self):
        return max((abs(v) for v in self.comps.values()), default=0.0)

    def top_coefficient(self):
        """Coefficient of the full coordinate volume form."""
        return self.comps.get(tuple(range(self.n)), 0.0)


def zero_matrix(n, size, degree):
    return [[Form.zero(n, degree) for _ in range(size)] for _ in range(size)]


def mat_wedge(a, b):
    """(A wedge B)^i_j = sum_k A^i_k wedge B^k_j."""
    size = len(a)
    out = [[None] * size for _ in range(size)]
    for i in range(size):
        for j in range(size):
            acc = 0
            for k in range(size):
                acc = a[i][k].wedge(b[k][j]) + acc
            out[i][j] = acc
    return out


def mat_trace(a):
    acc = 0
    for i in range(len(a)):
        acc = a[i][i] + acc
    return acc


def mat_add(a, b, ca=1.0, cb=1.0):
    return [[a[i][j] * ca + b[i][j] * cb for j in range(len(a))]
            for i in range(len(a))]


def mat_scale(a, c):
    return [[a[i][j] * c for j in range(len(a))] for i in range(len(a))]


# --------------------------------------------------------------------------
# invariant polynomials
# --------------------------------------------------------------------------

def pfaffian_form(omega):
    """Euler form of an antisymmetric 4x4 matrix of 2-forms:
    (1/32 pi^2) eps_{abcd} O^{ab} ^ O^{cd}."""
    acc = 0
    for perm in permutations(range(4)):
        a, b, c, d = perm
        sign = _perm_sign(perm)
        acc = omega[a][b].wedge(omega[c][d]) * sign + acc
    return acc * (1.0 / (32.0 * pi ** 2))


def _perm_sign(perm):
    sign = 1
    p = list(perm)
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                sign = -sign
    return sign


def pontryagin_forms(omega, top=2):
    """p_1, ..., p_top from the determinant expansion det(I + O/2pi).

    The degree-4j part is the sum of 2j x 2j principal wedge-minors of
    O/2pi; works for any even matrix size.
    """
    size = len(omega)
    scaled = mat_scale(omega, 1.0 / (2.0 * pi))
    out = []
    for j in range(1, top + 1):
        k = 2 * j
        acc = 0
        for subset in combinations(range(size), k):
            acc = _wedge_minor(scaled, subset) + acc
        out.append(acc)
    return out


def _wedge_minor(mat, subset):
    acc = 0
    for perm in permutations(range(len(subset))):
        sign = _perm_sign(perm)
        term = None
        for row, col in enumerate(perm):
            f = mat[subset[row]][subset[col]]
            term = f if term is None else term.wedge(f)
        acc = term * sign + acc
    return acc


def p1_trace_form(omega):
    """-(1/2)(2pi)^-2 Tr(O^2)."""
    return mat_trace(mat_wedge(omega, omega)) * (-0.5 / (2.0 * pi) ** 2)


def p2_trace_form(omega):
    """(1/8)(2pi)^-4 [ (Tr O^2)^2 - 2 Tr O^4 ].

    This is the trace form consistent with the determinant-expansion
    definition of the Pontryagin forms (`pontryagin_forms` reproduces it
    exactly for antisymmetric arguments)."""
    o2 = mat_wedge(omega, omega)
    tr2 = mat_trace(o2)
    tr4 = mat_trace(mat_wedge(o2, o2))
    return (tr2.wedge(tr2) - tr4 * 2.0) * (0.125 / (2.0 * pi) ** 4)


def l2_form(omega):
    """(1/45)(7 p2 - p1^2) in its trace form:
    (2pi)^-4/360 [ 5 (Tr O^2)^2 - 14 Tr O^4 ]."""
    o2 = mat_wedge(omega, omega)
    tr2 = mat_trace(o2)
    tr4 = mat_trace(mat_wedge(o2, o2))
    return (tr2.wedge(tr2) * 5.0 - tr4 * 14.0) \
        * (1.0 / (360.0 * (2.0 * pi) ** 4))


def l2_transgression_integrand(theta, omega_t):
    """Polarized degree-8 L-polynomial: 4 P(theta, O_t, O_t, O_t) =
    (2pi)^-4/360 [ 20 Tr(theta O_t) (Tr O_t^2) - 56 Tr(theta O_t^3) ]."""
    ot2 = mat_wedge(omega_t, omega_t)
    tr_to = mat_trace(mat_wedge(theta, omega_t))
    tr_o2 = mat_trace(ot2)
    tr_to3 = mat_trace(mat_wedge(theta, mat_wedge(omega_t, ot2)))
    return (tr_to.wedge(tr_o2) * 20.0 - tr_to3 * 56.0) \
        * (1.0 / (360.0 * (2.0 * pi) ** 4))
