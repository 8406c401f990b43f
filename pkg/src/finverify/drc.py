"""Rule-deck evaluation over a flattened layout."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from finverify import kernels
from finverify.geometry import (
    IntervalIndex,
    Rect,
    ShapeSet,
    _rects_of,
    boolean_subtract,
    interior_min_width,
    merge_sets,
    overlap_area,
)
from finverify.layoutio import FlatLayout
from finverify.techdb import Rule, TechDB


@dataclass(frozen=True)
class Violation:
    rule_id: str
    layers: tuple
    location: Rect
    measured: float
    required: object
    message: str

    def sort_key(self):
        r = self.location
        return (self.rule_id, r.x0, r.y0, r.x1, r.y1, self.measured, self.layers, self.message)

    def to_dict(self) -> dict:
        req = sorted(self.required) if isinstance(self.required, (set, frozenset, tuple, list)) else self.required
        return {
            "rule_id": self.rule_id,
            "layers": list(self.layers),
            "location": [self.location.x0, self.location.y0, self.location.x1, self.location.y1],
            "measured": self.measured,
            "required": req,
            "message": self.message,
        }


def _bbox_pair(p, q) -> Rect:
    return p.bbox.union(q.bbox)


def _union(layout: FlatLayout, names, label: str) -> ShapeSet:
    return merge_sets(label, layout.family(names))


# ---------------------------------------------------------------------------
# individual rule kinds


def check_min_width(layout: FlatLayout, rule: Rule, tech: TechDB | None = None) -> list:
    out = []
    for name in rule.layers:
        for p in layout.layer(name).polygons:
            w = interior_min_width(p)
            if w < rule.value:
                out.append(Violation(rule.rule_id, (name,), p.bbox, w, rule.value, f"{name} width {w} < {rule.value}"))
    return out


def _spacing_pairs(a: ShapeSet, b: ShapeSet | None, value: int):
    """Polygon index pairs whose Euclidean gap ``d`` satisfies ``0 < d < value``.

    ``b=None`` compares ``a`` against itself.  Yields ``(i, j, d)`` with ``d``
    floored to nm.
    """
    ia = IntervalIndex.of(a)
    cand = ia.owner_pairs(value - 1) if b is None else ia.owner_cross(IntervalIndex.of(b), value - 1)
    other = a if b is None else b
    for i, j in cand:
        g2 = int(kernels.min_gap2(a.polygons[i].rects, other.polygons[j].rects))
        if 0 < g2 < value * value:
            yield i, j, math.isqrt(g2)


def check_min_spacing(layout: FlatLayout, rule: Rule, tech: TechDB | None = None) -> list:
    out = []
    if rule.kind == "MIN_SPACING_SAME_COLOR":
        for name in rule.layers:
            s = layout.layer(name)
            for i, j, d in _spacing_pairs(s, None, rule.value):
                loc = _bbox_pair(s.polygons[i], s.polygons[j])
                out.append(Violation(rule.rule_id, (name,), loc, d, rule.value, f"{name} spacing {d} < {rule.value}"))
    else:
        for na in rule.layers:
            for nb in rule.other:
                a, b = layout.layer(na), layout.layer(nb)
                if not a or not b:
                    continue
                for i, j, d in _spacing_pairs(a, b, rule.value):
                    loc = _bbox_pair(a.polygons[i], b.polygons[j])
                    out.append(
                        Violation(rule.rule_id, (na, nb), loc, d, rule.value, f"{na}/{nb} spacing {d} < {rule.value}")
                    )
    return out


def quantized_ok(width: int, base: int, step: int) -> bool:
    return width >= base and (width - base) % step == 0


def check_quantized_width(layout: FlatLayout, rule: Rule, tech: TechDB) -> list:
    """Drawn active width across the fins must be ``base + k*step``.

    Non-rectangular shapes are left to the companion RECT_ONLY rule.
    """
    vertical = tech.fin_direction == "horizontal"
    out = []
    for name in rule.layers:
        for p in layout.layer(name).polygons:
            if not p.is_rect:
                continue
            w = p.bbox.height if vertical else p.bbox.width
            if not quantized_ok(w, rule.base, rule.step):
                out.append(
                    Violation(
                        rule.rule_id,
                        (name,),
                        p.bbox,
                        w,
                        f"{rule.base}+{rule.step}k",
                        f"{name} width {w} is not {rule.base} + k*{rule.step}",
                    )
                )
    return out


def gate_length(poly, act: ShapeSet, fins_horizontal: bool = True) -> int:
    """Channel-direction dimension of a gate shape.

    A rectangle that crosses active uses its extent along the fins; one that
    does not uses its smaller side; anything else uses its interior width.
    """
    if not poly.is_rect:
        return interior_min_width(poly)
    b = poly.bbox
    if act and overlap_area(poly, act) > 0:
        return b.width if fins_horizontal else b.height
    return min(b.width, b.height)


def check_discrete_gate_length(layout: FlatLayout, rule: Rule, tech: TechDB) -> list:
    act = merge_sets("ACT", layout.family(tech.by_class("ACTIVE")))
    allowed = frozenset(rule.values)
    horiz = tech.fin_direction == "horizontal"
    out = []
    for name in rule.layers:
        for p in layout.layer(name).polygons:
            L = gate_length(p, act, horiz)
            if L not in allowed:
                out.append(
                    Violation(rule.rule_id, (name,), p.bbox, L, tuple(sorted(allowed)), f"{name} length {L} not in {sorted(allowed)}")
                )
    return out


def enclosure_margin(inner, outer: ShapeSet, limit: int) -> int:
    """Chebyshev margin of ``inner`` inside ``outer``, capped at ``limit``.

    Returns -1 when ``inner`` is not contained in ``outer``.
    """
    ri = _rects_of(inner)
    b = Rect(int(ri[:, 0].min()), int(ri[:, 1].min()), int(ri[:, 2].max()), int(ri[:, 3].max()))
    win = ShapeSet.from_rects("_w", [(b.x0 - limit, b.y0 - limit, b.x1 + limit, b.y1 + limit)])
    near = kernels.cross_pairs(win.rects, outer.rects, 0)[:, 1] if outer else []
    comp = boolean_subtract(win, ShapeSet.from_rects("_o", outer.rects[near]) if len(near) else ShapeSet("_o"))
    if not comp:
        return limit
    if overlap_area(ri, comp.rects) > 0:
        return -1
    return min(limit, int(kernels.min_cheb_gap(ri, comp.rects)))


def check_enclosure_overlap_area(layout: FlatLayout, rules, tech: TechDB | None = None) -> list:
    if isinstance(rules, Rule):
        rules = [rules]
    out = []
    for rule in rules:
        if rule.kind == "MIN_AREA":
            for name in rule.layers:
                for p in layout.layer(name).polygons:
                    if p.area < rule.value:
                        out.append(Violation(rule.rule_id, (name,), p.bbox, p.area, rule.value, f"{name} area {p.area} < {rule.value}"))
            continue
        outer = _union(layout, rule.outer, "+".join(rule.outer))
        for name in rule.layers:
            for p in layout.layer(name).polygons:
                if rule.kind == "ENCLOSURE":
                    m = enclosure_margin(p, outer, rule.value + 1) if outer else -1
                    if m < rule.value:
                        what = "not enclosed" if m < 0 else f"enclosure {m} < {rule.value}"
                        out.append(Violation(rule.rule_id, (name,) + tuple(rule.outer), p.bbox, m, rule.value, f"{name} {what}"))
                elif rule.kind == "OVERLAP":
                    a = overlap_area(p, outer) if outer else 0
                    if a < rule.value:
                        out.append(
                            Violation(rule.rule_id, (name,) + tuple(rule.outer), p.bbox, a, rule.value, f"{name} overlap {a} < {rule.value}")
                        )
    return out


def check_rect_only(layout: FlatLayout, rule: Rule, tech: TechDB | None = None) -> list:
    out = []
    for name in rule.layers:
        for p in layout.layer(name).polygons:
            if not p.is_rect:
                out.append(Violation(rule.rule_id, (name,), p.bbox, p.n_vertices, 4, f"{name} shape has {p.n_vertices} vertices"))
    return out


CHECKS = {
    "MIN_WIDTH": check_min_width,
    "MIN_SPACING_SAME_COLOR": check_min_spacing,
    "MIN_SPACING_DIFF_COLOR": check_min_spacing,
    "WIDTH_QUANTIZED": check_quantized_width,
    "DISCRETE_LENGTH": check_discrete_gate_length,
    "ENCLOSURE": check_enclosure_overlap_area,
    "OVERLAP": check_enclosure_overlap_area,
    "MIN_AREA": check_enclosure_overlap_area,
    "RECT_ONLY": check_rect_only,
}


def check_rule(layout: FlatLayout, rule: Rule, tech: TechDB) -> list:
    return CHECKS[rule.kind](layout, rule, tech)


def run_drc(layout: FlatLayout, tech: TechDB, workers: int = 1, rules=None) -> list:
    """All violations of the deck, sorted by rule id then location.

    Rules touching no populated layer are skipped.  ``workers > 1`` evaluates
    rules on a thread pool; the merged report is identical either way.
    """
    deck = [
        r
        for r in (tech.rules if rules is None else rules)
        if any(n in layout.layers for n in r.layers)
    ]
    if workers > 1 and len(deck) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda r: check_rule(layout, r, tech), deck))
    else:
        parts = [check_rule(layout, r, tech) for r in deck]
    return sorted((v for part in parts for v in part), key=Violation.sort_key)


def report_json(violations) -> str:
    return json.dumps({"violations": [v.to_dict() for v in violations], "count": len(violations)}, indent=1, sort_keys=True) + "\n"


def violation_keys(violations) -> set:
    """``(rule_id, location)`` identities, handy for set comparisons in tests."""
    return {(v.rule_id, tuple(v.location)) for v in violations}


__all__ = [
    "Violation",
    "check_min_width",
    "check_min_spacing",
    "check_quantized_width",
    "check_discrete_gate_length",
    "check_enclosure_overlap_area",
    "check_rect_only",
    "run_drc",
    "report_json",
    "gate_length",
    "enclosure_margin",
    "quantized_ok",
]
