"""Exact calculus of topological invariants for ALF recipe spaces.

Everything in this module is exact-by-default: topological data lives in
`fractions.Fraction`, and the only irrational quantities that can enter, the
cotangent-product signature defects of isolated fixed points, are carried in a
dual representation (exact value when the angles admit one, 64-digit float
otherwise).  The obstruction verdict is decided in exact arithmetic whenever
the defect data allows it.

Conventions: the boundary circle bundle of a k-monopole space has Euler number
+k, so the half adiabatic eta limit is k/3 - 1 and the one-point L-integral of
the k-monopole space is -2k/3.  Blow-ups glue in reversed-orientation
projective planes with (chi, tau) = (3, -1); surgeries add 2 to chi and leave
tau untouched.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import mpmath
from mpmath import mpf

from .errors import DegenerateAngle, InexactEquality, MalformedRecipe

# Working precision of the defect layer (decimal digits).
WORKING_DPS = 64

# Gaps smaller than this on the float path cannot be certified as zero
# (angle inputs may carry only double precision).
EQUALITY_TOL = Fraction(1, 10**12)

_IDENTITY_LABELS = {"id", "identity"}

mpmath.mp.dps = WORKING_DPS


def _to_mpf(x) -> mpf:
    if isinstance(x, Fraction):
        return mpf(x.numerator) / mpf(x.denominator)
    return mpf(x)


# --------------------------------------------------------------------------
# angles and defects
# --------------------------------------------------------------------------

# cot(q*pi/2) for the rational multiples q where it is rational, or a
# rational multiple of sqrt(3).
_COT_RATIONAL = {
    Fraction(1): Fraction(0),        # cot(pi/2)
    Fraction(1, 2): Fraction(1),     # cot(pi/4)
    Fraction(3, 2): Fraction(-1),    # cot(3pi/4)
}
_COT_SQRT3 = {
    Fraction(1, 3): Fraction(1),     # cot(pi/6)  = sqrt(3)
    Fraction(2, 3): Fraction(1, 3),  # cot(pi/3)  = sqrt(3)/3
    Fraction(4, 3): Fraction(-1, 3),  # cot(2pi/3)
    Fraction(5, 3): Fraction(-1),    # cot(5pi/6)
}


@dataclass(frozen=True)
class AnglePair:
    """Coherent rotation angles (theta1, theta2) at an isolated fixed point.

    Angles are radians in the open interval (0, 2pi).  When an angle is known
    as an exact rational multiple of pi the multiple is kept alongside, which
    lets the defect stay exact for the cotangent-friendly values.
    """

    theta1: float
    theta2: float
    pi_fraction1: Optional[Fraction] = None
    pi_fraction2: Optional[Fraction] = None

    def __post_init__(self):
        for name, theta, frac in (
            ("theta1", self.theta1, self.pi_fraction1),
            ("theta2", self.theta2, self.pi_fraction2),
        ):
            if frac is not None and not (0 < frac < 2):
                raise DegenerateAngle(f"{name} = {frac}*pi is not in (0, 2pi)")
            if not (0.0 < float(theta) < 2.0 * float(mpmath.pi)):
                raise DegenerateAngle(f"{name} = {theta} is not in (0, 2pi)")

    @classmethod
    def from_pi_fractions(cls, q1, q2) -> "AnglePair":
        q1, q2 = Fraction(q1), Fraction(q2)
        return cls(
            theta1=float(q1) * float(mpmath.pi),
            theta2=float(q2) * float(mpmath.pi),
            pi_fraction1=q1,
            pi_fraction2=q2,
        )

    def swapped(self) -> "AnglePair":
        return AnglePair(self.theta2, self.theta1,
                         self.pi_fraction2, self.pi_fraction1)

    def half_angles_mpf(self):
        """Half angles at full working precision."""
        vals = []
        for theta, frac in ((self.theta1, self.pi_fraction1),
                            (self.theta2, self.pi_fraction2)):
            if frac is not None:
                vals.append(_to_mpf(frac) * mpmath.pi / 2)
            else:
                vals.append(mpf(theta) / 2)
        return vals


@dataclass(frozen=True)
class DefectValue:
    """Signature defect -cot(theta1/2)cot(theta2/2) of one fixed point.

    `exact_form` lists the cotangent factor angles; `exact` is the defect as a
    Fraction when the angles admit an exact evaluation, else None.
    """

    exact_form: tuple
    float_value: mpf
    exact: Optional[Fraction]


def _exact_cot_class(frac: Optional[Fraction]):
    """Classify cot(frac*pi/2): ('rat', c), ('sqrt3', c) or None."""
    if frac is None:
        return None
    if frac in _COT_RATIONAL:
        return ("rat", _COT_RATIONAL[frac])
    if frac in _COT_SQRT3:
        return ("sqrt3", _COT_SQRT3[frac])
    return None


def _exact_defect(angles: AnglePair) -> Optional[Fraction]:
    c1 = _exact_cot_class(angles.pi_fraction1)
    c2 = _exact_cot_class(angles.pi_fraction2)
    # cot = 0 kills the product regardless of the other factor
    for c in (c1, c2):
        if c is not None and c[0] == "rat" and c[1] == 0:
            return Fraction(0)
    if c1 is None or c2 is None:
        return None
    k1, v1 = c1
    k2, v2 = c2
    if k1 == "rat" and k2 == "rat":
        return -v1 * v2
    if k1 == "sqrt3" and k2 == "sqrt3":
        return -3 * v1 * v2
    return None  # rational times sqrt(3)-multiple is irrational


def signature_defect(angles: AnglePair) -> DefectValue:
    """Fixed-point contribution -cot(theta1/2)cot(theta2/2) (dimension 4)."""
    h1, h2 = angles.half_angles_mpf()
    value = -mpmath.cot(h1) * mpmath.cot(h2)
    exact = _exact_defect(angles)
    if exact is not None:
        value = _to_mpf(exact)
    return DefectValue(
        exact_form=(angles.theta1, angles.theta2),
        float_value=value,
        exact=exact,
    )


# --------------------------------------------------------------------------
# group actions and bundles
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FixedPointDatum:
    group_element_id: str
    angles: AnglePair

    def __post_init__(self):
        if self.group_element_id.strip().lower() in _IDENTITY_LABELS:
            raise MalformedRecipe(
                "the identity element has no isolated fixed points")


@dataclass(frozen=True)
class GroupActionSpec:
    order: int
    fixed_points: tuple = ()

    def __post_init__(self):
        if self.order < 1:
            raise MalformedRecipe(f"group order must be >= 1, got {self.order}")
        if self.order == 1 and self.fixed_points:
            raise MalformedRecipe("trivial group cannot carry fixed points")
        object.__setattr__(self, "fixed_points", tuple(self.fixed_points))


@dataclass(frozen=True)
class CircleBundleSpec:
    """Rank-2 bundle over the boundary base surface; only chi(E) is needed."""

    euler_number: int


def epsilon_of(bundle: CircleBundleSpec) -> int:
    """Sign of the bundle Euler number, in {-1, 0, +1}."""
    n = bundle.euler_number
    return (n > 0) - (n < 0)


def adiabatic_eta_half(bundle: CircleBundleSpec) -> Fraction:
    """Half adiabatic limit of the boundary eta invariant: chi(E)/3 - eps(E)."""
    return Fraction(bundle.euler_number, 3) - epsilon_of(bundle)


class RhoValue(tuple):
    """(rational_part, defect_part) with the exact defect part when known."""

    def __new__(cls, rational_part, defect_part, defect_part_exact):
        self = super().__new__(cls, (rational_part, defect_part))
        self.rational_part = rational_part
        self.defect_part = defect_part
        self.defect_part_exact = defect_part_exact
        return self


def _defect_sum(fixed_points) -> tuple:
    """Sum of defects: (float sum, exact sum or None)."""
    total = mpf(0)
    exact_total = Fraction(0)
    all_exact = True
    for fp in fixed_points:
        d = signature_defect(fp.angles)
        total += d.float_value
        if d.exact is None:
            all_exact = False
        else:
            exact_total += d.exact
    return total, (exact_total if all_exact else None)


def rho_invariant(action: GroupActionSpec, bundle: CircleBundleSpec) -> RhoValue:
    """Covering rho invariant: (|G|-1)eps(E) minus the total defect sum."""
    eps = epsilon_of(bundle)
    rational = Fraction((action.order - 1) * eps)
    dsum, dsum_exact = _defect_sum(action.fixed_points)
    return RhoValue(rational, -dsum,
                    -dsum_exact if dsum_exact is not None else None)


@dataclass(frozen=True)
class GSignatureRecord:
    element_id: str
    tau_element: int                 # trace signature of the element, = eps(E)
    defect_sum: mpf
    defect_sum_exact: Optional[Fraction]
    implied_half_eta: mpf
    implied_half_eta_exact: Optional[Fraction]


def g_signature_check(action: GroupActionSpec,
                      bundle: CircleBundleSpec) -> list:
    """Per-element consistency surface of the equivariant signature identity.

    For each non-identity element the identity tau(a) = sum(def) - eta_a/2
    with tau(a) = eps(E) is solved for the implied eta_a/2 = sum(def) - eps(E).
    """
    if action.order < 2:
        raise MalformedRecipe("g_signature_check needs a nontrivial group")
    eps = epsilon_of(bundle)
    by_element: dict = {}
    for fp in action.fixed_points:
        by_element.setdefault(fp.group_element_id, []).append(fp)
    records = []
    for element_id in sorted(by_element):
        dsum, dsum_exact = _defect_sum(by_element[element_id])
        exact_eta = dsum_exact - eps if dsum_exact is not None else None
        records.append(GSignatureRecord(
            element_id=element_id,
            tau_element=eps,
            defect_sum=dsum,
            defect_sum_exact=dsum_exact,
            implied_half_eta=dsum - eps,
            implied_half_eta_exact=exact_eta,
        ))
    return records


# --------------------------------------------------------------------------
# space recipes
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MultiTaubNut:
    k: int


@dataclass(frozen=True)
class Quotient:
    inner: "SpaceRecipe"
    action: GroupActionSpec
    bundle: CircleBundleSpec


@dataclass(frozen=True)
class BlowUps:
    inner: "SpaceRecipe"
    l: int


@dataclass(frozen=True)
class Surgery:
    inner: "SpaceRecipe"
    count: int


SpaceRecipe = Union[MultiTaubNut, Quotient, BlowUps, Surgery]

# (chi, tau) of the reversed-orientation projective plane used by blow-ups.
_BLOWUP_CHI = 3
_BLOWUP_TAU = -1


def validate_recipe(recipe: SpaceRecipe) -> None:
    """Structural rules: single quotient, directly above the monopole leaf."""
    node = recipe
    seen_quotient = False
    while True:
        if isinstance(node, MultiTaubNut):
            if node.k < 1:
                raise MalformedRecipe(f"monopole count must be >= 1, got {node.k}")
            return
        if isinstance(node, Quotient):
            if seen_quotient:
                raise MalformedRecipe("at most one quotient per recipe")
            if not isinstance(node.inner, MultiTaubNut):
                raise MalformedRecipe(
                    "quotients are only taken of the monopole space itself")
            seen_quotient = True
            node = node.inner
        elif isinstance(node, BlowUps):
            if node.l < 0:
                raise MalformedRecipe("blow-up count must be >= 0")
            node = node.inner
        elif isinstance(node, Surgery):
            if node.count < 0:
                raise MalformedRecipe("surgery count must be >= 0")
            node = node.inner
        else:
            raise MalformedRecipe(f"unknown recipe node {node!r}")


@dataclass(frozen=True)
class _RecipeData:
    chi: Fraction
    tau: Fraction           # defect-free rational part of the signature
    l_integral: Fraction    # exact value of the curvature L-integral
    chi_e: int
    order: int
    action: Optional[GroupActionSpec]


def _analyze(recipe: SpaceRecipe) -> _RecipeData:
    validate_recipe(recipe)
    return _analyze_node(recipe)


def _analyze_node(node: SpaceRecipe) -> _RecipeData:
    if isinstance(node, MultiTaubNut):
        k = node.k
        return _RecipeData(
            chi=Fraction(k),
            tau=Fraction(1 - k),
            l_integral=Fraction(k, 3) - k,
            chi_e=k,
            order=1,
            action=None,
        )
    if isinstance(node, Quotient):
        inner = _analyze_node(node.inner)
        n = node.action.order
        eps = epsilon_of(node.bundle)
        chi_e = node.bundle.euler_number
        lint = inner.l_integral / n
        tau = lint + eps - Fraction(chi_e, 3 * n)
        return _RecipeData(
            chi=inner.chi / n,
            tau=tau,
            l_integral=lint,
            chi_e=chi_e,
            order=n,
            action=node.action,
        )
    if isinstance(node, BlowUps):
        inner = _analyze_node(node.inner)
        return _RecipeData(
            chi=inner.chi + node.l * (_BLOWUP_CHI - 2),
            tau=inner.tau + node.l * _BLOWUP_TAU,
            l_integral=inner.l_integral + node.l * _BLOWUP_TAU,
            chi_e=inner.chi_e,
            order=inner.order,
            action=inner.action,
        )
    if isinstance(node, Surgery):
        inner = _analyze_node(node.inner)
        return _RecipeData(
            chi=inner.chi + 2 * node.count,
            tau=inner.tau,
            l_integral=inner.l_integral,
            chi_e=inner.chi_e,
            order=inner.order,
            action=inner.action,
        )
    raise MalformedRecipe(f"unknown recipe node {node!r}")


def euler_char(recipe: SpaceRecipe) -> Fraction:
    """Exact Euler characteristic of the recipe space."""
    return _analyze(recipe).chi


def signature(recipe: SpaceRecipe) -> Fraction:
    """Exact (defect-free part of the) signature of the recipe space."""
    return _analyze(recipe).tau


# --------------------------------------------------------------------------
# dual-representation reals and the obstruction report
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DualReal:
    """Exact rational part plus a defect part that may itself be exact."""

    rational: Fraction
    defect_float: mpf
    defect_exact: Optional[Fraction]

    @property
    def is_exact(self) -> bool:
        return self.defect_exact is not None

    @property
    def exact(self) -> Optional[Fraction]:
        if self.defect_exact is None:
            return None
        return self.rational + self.defect_exact

    @property
    def value(self) -> mpf:
        return _to_mpf(self.rational) + self.defect_float

    @classmethod
    def from_fraction(cls, q) -> "DualReal":
        return cls(Fraction(q), mpf(0), Fraction(0))

    def __float__(self):
        return float(self.value)


class Verdict(enum.Enum):
    ObstructionViolated = "ObstructionViolated"
    Equality = "Equality"
    NoObstruction = "NoObstruction"


RIGIDITY_NOTE = ("equality case: the universal cover is a complete Ricci-flat "
                 "(anti-)self-dual manifold")


@dataclass(frozen=True)
class InvariantReport:
    chi: Fraction
    tau: Fraction
    eps_E: int
    chi_E: int
    group_order: int
    eta_half_adiabatic: Fraction
    rho_rational_part: Fraction
    defect_sum: mpf
    defect_sum_exact: Optional[Fraction]
    corrected_tau: DualReal
    ht_gap: DualReal
    verdict: Verdict
    rigidity_note: Optional[str] = None


def corrected_tau_parts(tau, bundle: CircleBundleSpec, order: int = 1,
                        fixed_points: Sequence[FixedPointDatum] = ()) -> DualReal:
    """tau - eps(E) + (defect sum + chi(E)/3)/|G| from raw ingredients."""
    if order < 1:
        raise MalformedRecipe("group order must be >= 1")
    tau = Fraction(tau)
    eps = epsilon_of(bundle)
    dsum, dsum_exact = _defect_sum(fixed_points)
    rational = tau - eps + Fraction(bundle.euler_number, 3 * order)
    return DualReal(
        rational=rational,
        defect_float=dsum / order,
        defect_exact=dsum_exact / order if dsum_exact is not None else None,
    )


def corrected_tau(recipe: SpaceRecipe) -> DualReal:
    """Boundary-corrected signature; equals the recipe's exact L-integral
    whenever the defect data vanishes."""
    data = _analyze(recipe)
    fps = data.action.fixed_points if data.action is not None else ()
    return corrected_tau_parts(data.tau, CircleBundleSpec(data.chi_e),
                               data.order, fps)


def _abs_dual(x: DualReal) -> DualReal:
    if x.is_exact:
        a = abs(x.exact)
        return DualReal(a, mpf(0), Fraction(0))
    v = x.value
    if v >= 0:
        return x
    return DualReal(-x.rational, -x.defect_float, None)


def ht_gap(recipe: SpaceRecipe) -> InvariantReport:
    """Full obstruction report: gap = chi - (3/2)|corrected tau|.

    The verdict is decided exactly when the defect data is exact; a float-path
    gap indistinguishable from zero raises InexactEquality instead of claiming
    the rigidity case.
    """
    data = _analyze(recipe)
    fps = data.action.fixed_points if data.action is not None else ()
    bundle = CircleBundleSpec(data.chi_e)
    corr = corrected_tau_parts(data.tau, bundle, data.order, fps)
    dsum, dsum_exact = _defect_sum(fps)

    abs_corr = _abs_dual(corr)
    gap = DualReal(
        rational=data.chi - Fraction(3, 2) * abs_corr.rational,
        defect_float=-Fraction(3, 2) * abs_corr.defect_float,
        defect_exact=(-Fraction(3, 2) * abs_corr.defect_exact
                      if abs_corr.defect_exact is not None else None),
    )

    rigidity = None
    if gap.is_exact:
        g = gap.exact
        if g < 0:
            verdict = Verdict.ObstructionViolated
        elif g == 0:
            verdict = Verdict.Equality
            rigidity = RIGIDITY_NOTE
        else:
            verdict = Verdict.NoObstruction
    else:
        g = gap.value
        if abs(g) < _to_mpf(EQUALITY_TOL):
            raise InexactEquality(
                "gap is numerically zero but not exactly representable")
        verdict = (Verdict.ObstructionViolated if g < 0
                   else Verdict.NoObstruction)

    return InvariantReport(
        chi=data.chi,
        tau=data.tau,
        eps_E=epsilon_of(bundle),
        chi_E=data.chi_e,
        group_order=data.order,
        eta_half_adiabatic=adiabatic_eta_half(bundle),
        rho_rational_part=Fraction((data.order - 1) * epsilon_of(bundle)),
        defect_sum=dsum,
        defect_sum_exact=dsum_exact,
        corrected_tau=corr,
        ht_gap=gap,
        verdict=verdict,
        rigidity_note=rigidity,
    )


# --------------------------------------------------------------------------
# canonical example families
# --------------------------------------------------------------------------

def quotient_space(k: int, fixed_points: Sequence[FixedPointDatum] = ()) -> Quotient:
    """Cyclic quotient of the k-monopole space by the order-k rotation."""
    return Quotient(
        inner=MultiTaubNut(k),
        action=GroupActionSpec(order=k, fixed_points=tuple(fixed_points)),
        bundle=CircleBundleSpec(euler_number=k),
    )


def example_family(n: int, k: int = 4, l: int = 0) -> SpaceRecipe:
    """Built-in recipe families 1..3 (quotient, blow-ups, surgery+blow-ups)."""
    if n == 1:
        return quotient_space(k)
    if n == 2:
        return BlowUps(quotient_space(k), l)
    if n == 3:
        return BlowUps(Surgery(quotient_space(k), 1), l)
    raise MalformedRecipe(f"example family must be 1, 2 or 3, got {n}")
