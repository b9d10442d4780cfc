"""Recipe files: INI-style descriptions of a space construction.

Sections: [space] (variant, k, l, surgeries), [group] (order, fixed_points),
[bundle] (euler_number), [numeric] (integration plan, optional).  Angles are
rational multiples of pi ("1/2" means pi/2); decimal radians need an explicit
"rad" suffix.  Unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import ParseError
from .invariants import (
    AnglePair,
    BlowUps,
    CircleBundleSpec,
    FixedPointDatum,
    GroupActionSpec,
    MultiTaubNut,
    Quotient,
    SpaceRecipe,
    Surgery,
)
from .quadrature import IntegrationPlan

_SPACE_KEYS = {"variant", "k", "l", "surgeries"}
_GROUP_KEYS = {"order", "fixed_points"}
_BUNDLE_KEYS = {"euler_number"}
_NUMERIC_KEYS = {"outer_radius", "grid", "nut_ball_radius",
                 "string_exclusion_angle", "extrapolation"}
_VARIANTS = {"multi-taub-nut", "quotient"}


@dataclass(frozen=True)
class ParsedRecipe:
    recipe: SpaceRecipe
    plan: Optional[IntegrationPlan]
    variant: str
    k: int
    l: int
    surgeries: int


def _parse_angle(token: str) -> tuple:
    token = token.strip()
    if token.endswith("rad"):
        try:
            return float(token[:-3]), None
        except ValueError as exc:
            raise ParseError(f"bad radian angle {token!r}") from exc
    try:
        frac = Fraction(token)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"bad angle {token!r} (use p/q of pi or '<x>rad')") from exc
    return None, frac


def _parse_fixed_points(text: str):
    out = []
    for chunk in text.replace("\n", ";").split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" not in chunk:
            raise ParseError(f"fixed point {chunk!r} needs 'element: a1 a2'")
        label, angles = chunk.split(":", 1)
        toks = angles.split()
        if len(toks) != 2:
            raise ParseError(f"fixed point {chunk!r} needs two angles")
        parts = [_parse_angle(t) for t in toks]
        if parts[0][1] is not None and parts[1][1] is not None:
            pair = AnglePair.from_pi_fractions(parts[0][1], parts[1][1])
        else:
            import math
            vals = [p[0] if p[0] is not None else float(p[1]) * math.pi
                    for p in parts]
            pair = AnglePair(vals[0], vals[1])
        out.append(FixedPointDatum(label.strip(), pair))
    return tuple(out)


def _getint(section, key, default=None):
    if key not in section:
        if default is None:
            raise ParseError(f"missing key {key!r}")
        return default
    try:
        return int(section[key])
    except ValueError as exc:
        raise ParseError(f"key {key!r} must be an integer") from exc


def parse_recipe(text: str) -> ParsedRecipe:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ParseError(str(exc)) from exc

    known = {"space", "group", "bundle", "numeric"}
    for name in cp.sections():
        if name not in known:
            raise ParseError(f"unknown section [{name}]")
    if "space" not in cp:
        raise ParseError("missing [space] section")

    space = cp["space"]
    for key in space:
        if key not in _SPACE_KEYS:
            raise ParseError(f"unknown key {key!r} in [space]")
    variant = space.get("variant", "").strip().lower()
    if variant not in _VARIANTS:
        raise ParseError(f"variant must be one of {sorted(_VARIANTS)}")
    k = _getint(space, "k")
    l = _getint(space, "l", 0)
    surgeries = _getint(space, "surgeries", 0)

    recipe: SpaceRecipe = MultiTaubNut(k)
    if variant == "quotient":
        if "group" not in cp or "bundle" not in cp:
            raise ParseError("quotient recipes need [group] and [bundle]")
        group = cp["group"]
        for key in group:
            if key not in _GROUP_KEYS:
                raise ParseError(f"unknown key {key!r} in [group]")
        bundle = cp["bundle"]
        for key in bundle:
            if key not in _BUNDLE_KEYS:
                raise ParseError(f"unknown key {key!r} in [bundle]")
        action = GroupActionSpec(
            order=_getint(group, "order"),
            fixed_points=_parse_fixed_points(group.get("fixed_points", "")),
        )
        recipe = Quotient(recipe, action,
                          CircleBundleSpec(_getint(bundle, "euler_number")))
    elif "group" in cp or "bundle" in cp:
        raise ParseError("[group]/[bundle] sections need variant = quotient")

    if surgeries:
        recipe = Surgery(recipe, surgeries)
    if l:
        recipe = BlowUps(recipe, l)

    plan = None
    if "numeric" in cp:
        num = cp["numeric"]
        for key in num:
            if key not in _NUMERIC_KEYS:
                raise ParseError(f"unknown key {key!r} in [numeric]")
        kwargs = {}
        if "outer_radius" in num:
            kwargs["outer_radius"] = float(num["outer_radius"])
        if "grid" in num:
            toks = num["grid"].split()
            if len(toks) != 4:
                raise ParseError("grid needs four node counts")
            kwargs["grid"] = tuple(int(t) for t in toks)
        if "nut_ball_radius" in num:
            kwargs["nut_ball_radius"] = float(num["nut_ball_radius"])
        if "string_exclusion_angle" in num:
            kwargs["string_exclusion_angle"] = float(num["string_exclusion_angle"])
        if "extrapolation" in num:
            kwargs["extrapolation"] = num["extrapolation"].strip()
        try:
            plan = IntegrationPlan(**kwargs)
        except ValueError as exc:
            raise ParseError(str(exc)) from exc

    return ParsedRecipe(recipe=recipe, plan=plan, variant=variant,
                        k=k, l=l, surgeries=surgeries)


def parse_recipe_file(path: str) -> ParsedRecipe:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return parse_recipe(text)


def serialize_recipe(parsed: ParsedRecipe) -> str:
    """Canonical text for a parsed recipe; parsing it back gives an equal
    SpaceRecipe."""
    buf = io.StringIO()
    buf.write("[space]\n")
    buf.write(f"variant = {parsed.variant}\n")
    buf.write(f"k = {parsed.k}\n")
    buf.write(f"l = {parsed.l}\n")
    buf.write(f"surgeries = {parsed.surgeries}\n")
    node = parsed.recipe
    while not isinstance(node, MultiTaubNut):
        if isinstance(node, Quotient):
            buf.write("\n[group]\n")
            buf.write(f"order = {node.action.order}\n")
            if node.action.fixed_points:
                chunks = []
                for fp in node.action.fixed_points:
                    a = fp.angles
                    if a.pi_fraction1 is not None and a.pi_fraction2 is not None:
                        chunks.append(f"{fp.group_element_id}: "
                                      f"{a.pi_fraction1} {a.pi_fraction2}")
                    else:
                        chunks.append(f"{fp.group_element_id}: "
                                      f"{a.theta1!r}rad {a.theta2!r}rad")
                buf.write("fixed_points = " + "; ".join(chunks) + "\n")
            buf.write("\n[bundle]\n")
            buf.write(f"euler_number = {node.bundle.euler_number}\n")
        node = node.inner
    if parsed.plan is not None:
        p = parsed.plan
        buf.write("\n[numeric]\n")
        buf.write(f"outer_radius = {p.outer_radius!r}\n")
        buf.write("grid = " + " ".join(str(n) for n in p.grid) + "\n")
        if p.nut_ball_radius is not None:
            buf.write(f"nut_ball_radius = {p.nut_ball_radius!r}\n")
        buf.write(f"string_exclusion_angle = {p.string_exclusion_angle!r}\n")
        buf.write(f"extrapolation = {p.extrapolation}\n")
    return buf.getvalue()
