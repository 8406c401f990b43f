"""Layout cells, JSON ingestion, flattening and SVG rendering.

Layout file (``schema_version`` 1)::

    {"schema_version": 1,
     "cells": {
       "INV": {
         "shapes": {"M1A": [[x0, y0, x1, y1], [[x, y], [x, y], ...]]},
         "instances": [{"cell": "SUB", "at": [dx, dy], "rotate": 90, "mirror": false}],
         "pins": [{"net": "ZN", "layer": "M1A", "at": [x, y]}]}}}

Shapes are either ``[x0, y0, x1, y1]`` boxes or rectilinear vertex lists.
All coordinates are integer nanometres.  Instance transforms mirror about
the x axis first, then rotate counterclockwise, then translate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

import numpy as np

from finverify._io import atomic_write_text
from finverify.geometry import (
    GeometryError,
    Point,
    Polygon,
    Rect,
    ShapeSet,
    region_polygons,
    transform_point,
    transform_rects,
)
from finverify.techdb import TechDB, TechError


class LayoutError(ValueError):
    pass


@dataclass(frozen=True)
class Instance:
    cell: str
    dx: int = 0
    dy: int = 0
    rotation: int = 0
    mirror: bool = False
    name: str = ""


@dataclass(frozen=True)
class Pin:
    net: str
    layer: str
    at: Point


@dataclass(frozen=True)
class Cell:
    name: str
    shapes: Mapping = field(default_factory=dict)  # layer -> ShapeSet (as drawn)
    instances: tuple = ()
    pins: tuple = ()


@dataclass(frozen=True)
class Library:
    tech: TechDB
    cells: Mapping

    def __getitem__(self, name: str) -> Cell:
        try:
            return self.cells[name]
        except KeyError:
            raise LayoutError(f"no cell named {name!r}") from None

    def top_cells(self) -> list:
        used = {i.cell for c in self.cells.values() for i in c.instances}
        return sorted(n for n in self.cells if n not in used)

    def flatten(self, top: str) -> "FlatLayout":
        return flatten(self[top], self)


@dataclass(frozen=True)
class FlatLayout:
    """Normalized per-layer geometry in stack order, plus root pins."""

    layers: Mapping
    pins: tuple = ()
    name: str = ""

    def layer(self, name: str) -> ShapeSet:
        return self.layers.get(name) or ShapeSet(name)

    def family(self, names) -> list:
        return [self.layers[n] for n in names if n in self.layers]

    def translate(self, dx: int, dy: int) -> "FlatLayout":
        return FlatLayout(
            MappingProxyType({k: s.translate(dx, dy) for k, s in self.layers.items()}),
            tuple(Pin(p.net, p.layer, Point(p.at.x + dx, p.at.y + dy)) for p in self.pins),
            self.name,
        )

    def bbox(self):
        boxes = [s.bbox() for s in self.layers.values() if s]
        if not boxes:
            return None
        out = boxes[0]
        for b in boxes[1:]:
            out = out.union(b)
        return out

    def layer_areas(self) -> dict:
        return {k: s.area for k, s in self.layers.items()}


# ---------------------------------------------------------------------------
# parsing


def _coord(v, where) -> int:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise LayoutError(f"{where}: coordinate {v!r} is not a number")
    if int(v) != v:
        rem = v - np.floor(v)
        raise LayoutError(f"{where}: off-grid coordinate {v} (remainder {rem:g} nm on the 1 nm grid)")
    return int(v)


def _parse_shape(raw, where) -> Polygon:
    if isinstance(raw, list) and len(raw) == 4 and all(not isinstance(v, list) for v in raw):
        x0, y0, x1, y1 = (_coord(v, where) for v in raw)
        if x0 >= x1 or y0 >= y1:
            raise LayoutError(f"{where}: degenerate box {raw} (zero area)")
        return Polygon.from_rect((x0, y0, x1, y1))
    if not isinstance(raw, list) or len(raw) < 4:
        raise LayoutError(f"{where}: expected a box or a vertex list with >= 4 points")
    pts = []
    for p in raw:
        if not isinstance(p, list) or len(p) != 2:
            raise LayoutError(f"{where}: malformed vertex {p!r}")
        pts.append((_coord(p[0], where), _coord(p[1], where)))
    n = len(pts)
    for k in range(n):
        (ax, ay), (bx, by) = pts[k], pts[(k + 1) % n]
        if ax != bx and ay != by:
            raise LayoutError(f"{where}: non-rectilinear edge {pts[k]} -> {pts[(k + 1) % n]}")
    try:
        return Polygon.from_vertices(pts)
    except GeometryError as exc:
        raise LayoutError(f"{where}: {exc}") from None


def parse_layout(doc: dict, tech: TechDB) -> Library:
    if doc.get("schema_version") != 1:
        raise LayoutError(f"unsupported schema_version {doc.get('schema_version')!r}")
    raw_cells = doc.get("cells")
    if not isinstance(raw_cells, dict):
        raise LayoutError("layout: missing 'cells' object")
    cells = {}
    for cname in sorted(raw_cells):
        rc = raw_cells[cname]
        shapes = {}
        for lname, items in rc.get("shapes", {}).items():
            try:
                layer = tech.resolve(lname)
            except TechError:
                raise LayoutError(f"cell {cname}: unknown layer {lname!r}") from None
            polys = [_parse_shape(raw, f"cell {cname} layer {lname} shape {k}") for k, raw in enumerate(items)]
            prev = shapes.get(layer)
            shapes[layer] = ShapeSet(layer, (prev.polygons if prev else ()) + tuple(polys))
        insts = []
        for k, ri in enumerate(rc.get("instances", [])):
            where = f"cell {cname} instance {k}"
            at = ri.get("at", [0, 0])
            rot = int(ri.get("rotate", 0))
            if rot % 90:
                raise LayoutError(f"{where}: rotation must be a multiple of 90, got {rot}")
            insts.append(
                Instance(ri["cell"], _coord(at[0], where), _coord(at[1], where), rot % 360, bool(ri.get("mirror", False)), ri.get("name", ""))
            )
        pins = []
        for k, rp in enumerate(rc.get("pins", [])):
            where = f"cell {cname} pin {k}"
            try:
                layer = tech.resolve(rp["layer"])
            except TechError:
                raise LayoutError(f"{where}: unknown layer {rp['layer']!r}") from None
            pins.append(Pin(str(rp["net"]), layer, Point(_coord(rp["at"][0], where), _coord(rp["at"][1], where))))
        ordered = {n: shapes[n] for n in tech.layers if n in shapes}
        cells[cname] = Cell(cname, MappingProxyType(ordered), tuple(insts), tuple(pins))
    lib = Library(tech, MappingProxyType(cells))
    _check_references(lib)
    for c in lib.cells.values():
        if c.pins:
            _check_pins(c, flatten(c, lib))
    return lib


def _check_references(lib: Library) -> None:
    state = {}

    def visit(name, path):
        if state.get(name) == 2:
            return
        if state.get(name) == 1:
            cyc = path[path.index(name) :] + [name]
            raise LayoutError("cyclic instantiation: " + " -> ".join(cyc))
        state[name] = 1
        for inst in lib.cells[name].instances:
            if inst.cell not in lib.cells:
                raise LayoutError(f"cell {name}: instance of undefined cell {inst.cell!r}")
            visit(inst.cell, path + [name])
        state[name] = 2

    for n in lib.cells:
        visit(n, [])


def _check_pins(cell: Cell, flat: FlatLayout) -> None:
    for p in cell.pins:
        s = flat.layers.get(p.layer)
        if s is None or not any(poly.contains_point(p.at) for poly in s.polygons):
            raise LayoutError(f"cell {cell.name}: pin {p.net} at {tuple(p.at)} is not on a {p.layer} shape")


def load_layout(path, tech: TechDB) -> Library:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise LayoutError(f"{path}:{exc.lineno}:{exc.colno}: parse error: {exc.msg}") from None
    return parse_layout(doc, tech)


def dump_layout(lib: Library) -> dict:
    """Serialize a library back to the JSON document form."""

    def shape(p: Polygon):
        if p.is_rect:
            b = p.bbox
            return [b.x0, b.y0, b.x1, b.y1]
        if p.holes:
            # holes are not expressible as a single vertex loop; emit the rect cover
            return None
        return [[v.x, v.y] for v in p.vertices]

    cells = {}
    for name, c in lib.cells.items():
        shapes = {}
        for lname, s in c.shapes.items():
            out = []
            for p in s.polygons:
                sh = shape(p)
                out.extend([sh] if sh is not None else [list(map(int, r)) for r in p.rects])
            shapes[lname] = out
        cells[name] = {
            "shapes": shapes,
            "instances": [
                {"cell": i.cell, "at": [i.dx, i.dy], "rotate": i.rotation, "mirror": i.mirror, **({"name": i.name} if i.name else {})}
                for i in c.instances
            ],
            "pins": [{"net": p.net, "layer": p.layer, "at": [p.at.x, p.at.y]} for p in c.pins],
        }
    return {"schema_version": 1, "cells": cells}


# ---------------------------------------------------------------------------
# flattening


def _collect(cell: Cell, lib: Library, memo: dict) -> dict:
    if cell.name in memo:
        return memo[cell.name]
    acc = {k: [s.rects] for k, s in cell.shapes.items() if s}
    for inst in cell.instances:
        sub = _collect(lib.cells[inst.cell], lib, memo)
        for layer, r in sub.items():
            acc.setdefault(layer, []).append(transform_rects(r, inst.rotation, inst.mirror, inst.dx, inst.dy))
    out = {k: np.concatenate(v) for k, v in acc.items() if v}
    memo[cell.name] = out
    return out


def flatten_rects(root: Cell, lib: Library) -> dict:
    """Per-layer rectangle arrays in the root frame, before normalization."""
    return _collect(root, lib, {})


def flatten(root: Cell, lib: Library) -> FlatLayout:
    raw = flatten_rects(root, lib)
    layers = {}
    for name in lib.tech.layers:
        if name in raw and len(raw[name]):
            layers[name] = ShapeSet(name, tuple(region_polygons(raw[name])))
    return FlatLayout(MappingProxyType(layers), tuple(root.pins), root.name)


def flat_from_rects(tech: TechDB, rects_by_layer: Mapping, pins=(), name: str = "") -> FlatLayout:
    """Build a normalized FlatLayout directly from rectangle lists."""
    layers = {}
    for lname in tech.layers:
        r = rects_by_layer.get(lname)
        if r is not None and len(r):
            layers[lname] = ShapeSet(lname, tuple(region_polygons(r)))
    for lname in rects_by_layer:
        tech.resolve(lname)
    return FlatLayout(MappingProxyType(layers), tuple(pins), name)


def transform_pin(p: Pin, inst: Instance) -> Pin:
    return Pin(p.net, p.layer, transform_point(p.at, inst.rotation, inst.mirror, inst.dx, inst.dy))


# ---------------------------------------------------------------------------
# SVG

_PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
    "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939", "#8c6d31", "#843c39",
)


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def svg_text(layout: FlatLayout, violations=(), order=None) -> str:
    """SVG 1.1 document: one group per populated layer, violations on top.

    Layout y grows upward, so the drawing group flips the y axis; coordinates
    inside it are the raw nanometre values.
    """
    names = [n for n in (order or layout.layers) if n in layout.layers and layout.layers[n]]
    box = layout.bbox()
    for v in violations:
        box = v.location if box is None else box.union(v.location)
    if box is None:
        box = Rect(0, 0, 1, 1)
    pad = 10
    x0, y0, w, h = box.x0 - pad, box.y0 - pad, box.width + 2 * pad, box.height + 2 * pad
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{x0} {-(y0 + h)} {w} {h}" width="{w}" height="{h}">',
        '<g transform="scale(1,-1)">',
    ]
    for k, name in enumerate(names):
        color = _PALETTE[k % len(_PALETTE)]
        out.append(f'<g id="layer-{_esc(name)}" fill="{color}" fill-opacity="0.35" stroke="{color}" stroke-width="1">')
        for p in layout.layers[name].polygons:
            pts = " ".join(f"{v.x},{v.y}" for v in p.vertices)
            if p.holes:
                d = "M" + " L".join(f"{v.x},{v.y}" for v in p.vertices) + " Z"
                for hl in p.holes:
                    d += " M" + " L".join(f"{v.x},{v.y}" for v in hl) + " Z"
                out.append(f'<path fill-rule="evenodd" d="{d}"/>')
            else:
                out.append(f'<polygon points="{pts}"/>')
        out.append("</g>")
    if violations:
        out.append('<g id="violations" fill="none" stroke="#ff0000" stroke-width="2">')
        for v in violations:
            r = v.location
            out.append(
                f'<rect class="violation" x="{r.x0}" y="{r.y0}" width="{r.width}" height="{r.height}">'
                f"<title>{_esc(v.rule_id)}</title></rect>"
            )
        out.append("</g>")
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_svg(layout: FlatLayout, violations, path, order=None) -> None:
    atomic_write_text(path, svg_text(layout, violations, order))
