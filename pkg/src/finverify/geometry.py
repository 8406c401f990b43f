"""Exact integer rectilinear geometry.

Regions are held as disjoint rectangles on a 1 nm grid.  Boolean operations
work on a compressed coordinate grid (one cell per pair of distinct
neighbouring coordinates), so every result is exact.  Polygons are rebuilt
from filled cells by tracing their boundary, which makes the output
canonical: the same region always yields the same vertex list, whatever
order the input shapes came in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy import ndimage

from finverify import kernels


class GeometryError(ValueError):
    pass


class Point(NamedTuple):
    x: int
    y: int


class Rect(NamedTuple):
    x0: int
    y0: int
    x1: int
    y1: int

    @property
    def lo(self) -> Point:
        return Point(self.x0, self.y0)

    @property
    def hi(self) -> Point:
        return Point(self.x1, self.y1)

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    @property
    def area(self) -> int:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def union(self, other: "Rect") -> "Rect":
        return Rect(min(self.x0, other.x0), min(self.y0, other.y0), max(self.x1, other.x1), max(self.y1, other.y1))

    def contains_point(self, p) -> bool:
        return self.x0 <= p[0] <= self.x1 and self.y0 <= p[1] <= self.y1


def make_rect(x0, y0, x1, y1) -> Rect:
    """Validated rectangle; corners may be given in any order."""
    x0, x1 = sorted((int(x0), int(x1)))
    y0, y1 = sorted((int(y0), int(y1)))
    if x0 == x1 or y0 == y1:
        raise GeometryError(f"degenerate rectangle ({x0}, {y0}, {x1}, {y1})")
    return Rect(x0, y0, x1, y1)


def _as_rect_array(rects) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(rects, dtype=np.int64).reshape(-1, 4))


# ---------------------------------------------------------------------------
# polygons


@dataclass(frozen=True)
class Polygon:
    """Rectilinear polygon: counterclockwise outer boundary, clockwise holes.

    Vertices start at the lowest, then leftmost corner.  ``rects`` holds the
    canonical decomposition into disjoint rectangles (horizontal slabs,
    merged vertically where identical).
    """

    vertices: tuple
    holes: tuple = ()
    rects: np.ndarray = field(default=None, compare=False, repr=False)

    @classmethod
    def from_vertices(cls, pts: Sequence) -> "Polygon":
        cycle = _clean_cycle([Point(int(p[0]), int(p[1])) for p in pts])
        rects = _rasterize_cycle(cycle)
        polys = region_polygons(rects)
        if len(polys) != 1 or polys[0].holes:
            raise GeometryError("polygon is not simple")
        poly = polys[0]
        if _canonical_cycle(cycle) != poly.vertices:
            raise GeometryError("polygon is not simple (self-touching or self-intersecting boundary)")
        return poly

    @classmethod
    def from_rect(cls, r) -> "Polygon":
        r = make_rect(*r)
        v = (Point(r.x0, r.y0), Point(r.x1, r.y0), Point(r.x1, r.y1), Point(r.x0, r.y1))
        return cls(v, (), np.array([r], dtype=np.int64))

    @cached_property
    def bbox(self) -> Rect:
        xs = [p.x for p in self.vertices]
        ys = [p.y for p in self.vertices]
        return Rect(min(xs), min(ys), max(xs), max(ys))

    @cached_property
    def area(self) -> int:
        r = self.rects
        return int(((r[:, 2] - r[:, 0]) * (r[:, 3] - r[:, 1])).sum())

    @property
    def n_vertices(self) -> int:
        return len(self.vertices) + sum(len(h) for h in self.holes)

    @property
    def is_rect(self) -> bool:
        return len(self.vertices) == 4 and not self.holes

    def translate(self, dx: int, dy: int) -> "Polygon":
        return Polygon(
            tuple(Point(p.x + dx, p.y + dy) for p in self.vertices),
            tuple(tuple(Point(p.x + dx, p.y + dy) for p in h) for h in self.holes),
            self.rects + np.array([dx, dy, dx, dy], dtype=np.int64),
        )

    def contains_point(self, p) -> bool:
        """Closed containment (boundary counts as inside)."""
        r = self.rects
        x, y = p[0], p[1]
        return bool(np.any((r[:, 0] <= x) & (x <= r[:, 2]) & (r[:, 1] <= y) & (y <= r[:, 3])))


def _clean_cycle(pts: list) -> list:
    if len(pts) > 1 and pts[0] == pts[-1]:
        pts = pts[:-1]
    out = []
    for p in pts:
        if not out or out[-1] != p:
            out.append(p)
    if len(out) > 1 and out[0] == out[-1]:
        out.pop()
    if len(out) < 4:
        raise GeometryError(f"polygon needs at least 4 distinct vertices, got {len(out)}")
    n = len(out)
    for k in range(n):
        a, b = out[k], out[(k + 1) % n]
        if a.x != b.x and a.y != b.y:
            raise GeometryError(f"non-rectilinear edge {tuple(a)} -> {tuple(b)}")
    # drop collinear interior vertices
    changed = True
    while changed and len(out) > 4:
        changed = False
        n = len(out)
        for k in range(n):
            a, b, c = out[k - 1], out[k], out[(k + 1) % n]
            if (a.x == b.x == c.x) or (a.y == b.y == c.y):
                out.pop(k)
                changed = True
                break
    return out


def _signed_area2(cycle) -> int:
    s = 0
    n = len(cycle)
    for k in range(n):
        a, b = cycle[k], cycle[(k + 1) % n]
        s += a.x * b.y - b.x * a.y
    return s


def _canonical_cycle(cycle, ccw=True) -> tuple:
    c = list(cycle)
    if (_signed_area2(c) > 0) != ccw:
        c.reverse()
    k = min(range(len(c)), key=lambda i: (c[i].y, c[i].x))
    return tuple(c[k:] + c[:k])


def _rasterize_cycle(cycle) -> np.ndarray:
    """Even-odd fill of a closed rectilinear cycle into slab rectangles."""
    n = len(cycle)
    vert = []
    for k in range(n):
        a, b = cycle[k], cycle[(k + 1) % n]
        if a.x == b.x:
            vert.append((a.x, min(a.y, b.y), max(a.y, b.y)))
    ys = sorted({p.y for p in cycle})
    rects = []
    for y0, y1 in zip(ys, ys[1:]):
        xs = sorted(x for x, lo, hi in vert if lo <= y0 and hi >= y1)
        if len(xs) % 2:
            raise GeometryError("open polygon boundary")
        for xa, xb in zip(xs[::2], xs[1::2]):
            if xb > xa:
                rects.append((xa, y0, xb, y1))
    if not rects:
        raise GeometryError("degenerate polygon (zero area)")
    return np.array(rects, dtype=np.int64)


# ---------------------------------------------------------------------------
# region construction from filled cells

_DIRS = {(1, 0): 0, (0, 1): 1, (-1, 0): 2, (0, -1): 3}


def _trace_loops(mask: np.ndarray) -> list:
    """Directed boundary loops (interior on the left) in grid-vertex indices."""
    nx, ny = mask.shape
    p = np.zeros((nx + 2, ny + 2), dtype=bool)
    p[1:-1, 1:-1] = mask
    c = p[1:-1, 1:-1]
    out = {}
    # bottom edges run +x, right +y, top -x, left -y
    for sel, d, off in (
        (c & ~p[1:-1, :-2], (1, 0), (0, 0)),
        (c & ~p[2:, 1:-1], (0, 1), (1, 0)),
        (c & ~p[1:-1, 2:], (-1, 0), (1, 1)),
        (c & ~p[:-2, 1:-1], (0, -1), (0, 1)),
    ):
        ii, jj = np.nonzero(sel)
        for i, j in zip(ii.tolist(), jj.tolist()):
            s = (i + off[0], j + off[1])
            out.setdefault(s, []).append(d)
    loops = []
    while out:
        start = min(out, key=lambda v: (v[1], v[0]))
        d = out[start].pop(0)
        if not out[start]:
            del out[start]
        loop = [start]
        v = (start[0] + d[0], start[1] + d[1])
        while v != start:
            loop.append(v)
            ds = out[v]
            if len(ds) == 1:
                d_next = ds[0]
            else:
                # pinch vertex: take the left-most turn so each loop stays simple
                rank = {(_DIRS[d] + 1) % 4: 0, _DIRS[d]: 1, (_DIRS[d] + 3) % 4: 2}
                d_next = min(ds, key=lambda e: rank.get(_DIRS[e], 3))
            ds.remove(d_next)
            if not ds:
                del out[v]
            v = (v[0] + d_next[0], v[1] + d_next[1])
            d = d_next
        loops.append(loop)
    return loops


def _simplify(loop) -> list:
    n = len(loop)
    keep = []
    for k in range(n):
        a, b, c = loop[k - 1], loop[k], loop[(k + 1) % n]
        if not ((a[0] == b[0] == c[0]) or (a[1] == b[1] == c[1])):
            keep.append(b)
    return keep


def _mask_rects(mask: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Maximal horizontal slabs, merged vertically when identical."""
    nx, ny = mask.shape
    out = []
    open_runs = {}
    for j in range(ny + 1):
        runs = set()
        if j < ny:
            col = np.zeros(nx + 2, dtype=np.int8)
            col[1:-1] = mask[:, j]
            dd = np.diff(col)
            runs = set(zip(np.nonzero(dd == 1)[0].tolist(), np.nonzero(dd == -1)[0].tolist()))
        for run in sorted(set(open_runs) - runs):
            j0 = open_runs.pop(run)
            out.append((xs[run[0]], ys[j0], xs[run[1]], ys[j]))
        for run in sorted(runs - set(open_runs)):
            open_runs[run] = j
    arr = np.array(out, dtype=np.int64).reshape(-1, 4)
    o = np.lexsort((arr[:, 0], arr[:, 1]))
    return arr[o]


def _mask_polygon(mask, xs, ys) -> Polygon:
    outer = None
    holes = []
    for loop in _trace_loops(mask):
        pts = [Point(int(xs[i]), int(ys[j])) for i, j in _simplify(loop)]
        if _signed_area2(pts) > 0:
            outer = _canonical_cycle(pts, ccw=True)
        else:
            holes.append(_canonical_cycle(pts, ccw=False))
    holes.sort(key=lambda h: (h[0].y, h[0].x))
    return Polygon(outer, tuple(holes), _mask_rects(mask, xs, ys))


def _clusters(rects: np.ndarray) -> list:
    """Groups of rectangle indices connected through touching bounding boxes."""
    n = len(rects)
    parent = np.arange(n)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in kernels.self_pairs(rects, 0).tolist():
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _compressed(rects: np.ndarray):
    xs = np.unique(rects[:, [0, 2]])
    ys = np.unique(rects[:, [1, 3]])
    idx = np.empty_like(rects)
    idx[:, 0] = np.searchsorted(xs, rects[:, 0])
    idx[:, 2] = np.searchsorted(xs, rects[:, 2])
    idx[:, 1] = np.searchsorted(ys, rects[:, 1])
    idx[:, 3] = np.searchsorted(ys, rects[:, 3])
    return xs, ys, idx


def _region_op(a: np.ndarray, b: np.ndarray, op) -> list:
    a = _as_rect_array(a)
    b = _as_rect_array(b)
    allr = np.concatenate([a, b])
    if len(allr) == 0:
        return []
    polys = []
    na = len(a)
    for group in _clusters(allr):
        g = np.array(group)
        xs, ys, idx = _compressed(allr[g])
        nx, ny = len(xs) - 1, len(ys) - 1
        sel_a = g < na
        ma = kernels.paint(np.ascontiguousarray(idx[sel_a]), nx, ny) > 0
        mb = kernels.paint(np.ascontiguousarray(idx[~sel_a]), nx, ny) > 0
        mask = op(ma, mb)
        if not mask.any():
            continue
        labels, count = ndimage.label(mask)
        for k in range(1, count + 1):
            polys.append(_mask_polygon(labels == k, xs, ys))
    polys.sort(key=lambda p: (p.vertices[0].y, p.vertices[0].x))
    return polys


def region_polygons(rects) -> list:
    """Polygons covering the union of ``rects``, canonical and sorted."""
    return _region_op(rects, np.empty((0, 4), dtype=np.int64), lambda a, b: a)


# ---------------------------------------------------------------------------
# shape sets


@dataclass(frozen=True)
class ShapeSet:
    layer: str
    polygons: tuple = ()

    @classmethod
    def from_rects(cls, layer: str, rects: Iterable) -> "ShapeSet":
        polys = []
        for k, r in enumerate(rects):
            try:
                polys.append(Polygon.from_rect(r))
            except GeometryError as exc:
                raise GeometryError(f"{layer} shape {k}: {exc}") from None
        return cls(layer, tuple(polys))

    @cached_property
    def rects(self) -> np.ndarray:
        if not self.polygons:
            return np.empty((0, 4), dtype=np.int64)
        return np.ascontiguousarray(np.concatenate([p.rects for p in self.polygons]))

    @cached_property
    def owners(self) -> np.ndarray:
        """Polygon index of every row of ``rects``."""
        if not self.polygons:
            return np.empty(0, dtype=np.int64)
        return np.concatenate([np.full(len(p.rects), k, dtype=np.int64) for k, p in enumerate(self.polygons)])

    @property
    def area(self) -> int:
        return sum(p.area for p in self.polygons)

    def __len__(self) -> int:
        return len(self.polygons)

    def __bool__(self) -> bool:
        return bool(self.polygons)

    def translate(self, dx: int, dy: int) -> "ShapeSet":
        return ShapeSet(self.layer, tuple(p.translate(dx, dy) for p in self.polygons))

    def with_layer(self, layer: str) -> "ShapeSet":
        return ShapeSet(layer, self.polygons)

    def bbox(self):
        if not self.polygons:
            return None
        r = self.rects
        return Rect(int(r[:, 0].min()), int(r[:, 1].min()), int(r[:, 2].max()), int(r[:, 3].max()))


def normalize(s: ShapeSet) -> ShapeSet:
    """Merge overlapping and abutting shapes into disjoint canonical polygons."""
    for k, p in enumerate(s.polygons):
        if p.rects is None or len(p.rects) == 0 or p.area <= 0:
            raise GeometryError(f"{s.layer} shape {k}: degenerate polygon (zero area)")
    return ShapeSet(s.layer, tuple(region_polygons(s.rects)))


def boolean_union(a: ShapeSet, b: ShapeSet) -> ShapeSet:
    return ShapeSet(a.layer, tuple(_region_op(a.rects, b.rects, np.logical_or)))


def boolean_subtract(a: ShapeSet, b: ShapeSet) -> ShapeSet:
    return ShapeSet(a.layer, tuple(_region_op(a.rects, b.rects, lambda x, y: x & ~y)))


def boolean_intersect(a: ShapeSet, b: ShapeSet) -> ShapeSet:
    return ShapeSet(a.layer, tuple(_region_op(a.rects, b.rects, np.logical_and)))


def merge_sets(layer: str, sets: Iterable[ShapeSet]) -> ShapeSet:
    rects = [s.rects for s in sets if s]
    if not rects:
        return ShapeSet(layer)
    return ShapeSet(layer, tuple(region_polygons(np.concatenate(rects))))


def _rects_of(x) -> np.ndarray:
    if isinstance(x, (ShapeSet, Polygon)):
        return x.rects
    if isinstance(x, Rect):
        return np.array([x], dtype=np.int64)
    return _as_rect_array(x)


def min_separation(a, b) -> int:
    """Euclidean gap between two shape sets (or polygons), floored to nm.

    Zero when the shapes touch or overlap.
    """
    ra, rb = _rects_of(a), _rects_of(b)
    if len(ra) == 0 or len(rb) == 0:
        raise GeometryError("min_separation of an empty shape set")
    return math.isqrt(int(kernels.min_gap2(ra, rb)))


def overlap_area(a, b) -> int:
    """Area of a ∩ b for rect arrays (inputs each internally disjoint)."""
    ra, rb = _rects_of(a), _rects_of(b)
    total = 0
    for i, j in kernels.cross_pairs(ra, rb, -1).tolist():
        w = min(ra[i, 2], rb[j, 2]) - max(ra[i, 0], rb[j, 0])
        h = min(ra[i, 3], rb[j, 3]) - max(ra[i, 1], rb[j, 1])
        if w > 0 and h > 0:
            total += int(w) * int(h)
    return total


def interior_min_width(p) -> int:
    """Smallest distance between opposing interior-facing edges of a polygon."""
    r = _rects_of(p)
    xs, ys, idx = _compressed(r)
    grid = kernels.paint(idx, len(xs) - 1, len(ys) - 1) > 0
    return int(kernels.min_run(grid, xs, ys))


# ---------------------------------------------------------------------------
# spatial index


class IntervalIndex:
    """Rectangles bucketed by a sorted sweep over x.

    Pure accelerator: every query returns exactly the brute-force answer.
    ``owners`` maps each rectangle to the caller's shape id.
    """

    def __init__(self, rects, owners=None):
        self.rects = _as_rect_array(rects)
        self.owners = np.arange(len(self.rects)) if owners is None else np.asarray(owners, dtype=np.int64)

    @classmethod
    def of(cls, s: ShapeSet) -> "IntervalIndex":
        return cls(s.rects, s.owners)

    def pairs(self, halo: int) -> np.ndarray:
        """Rectangle index pairs within ``halo`` (per axis) of each other."""
        return kernels.self_pairs(self.rects, halo)

    def cross(self, other: "IntervalIndex", halo: int) -> np.ndarray:
        return kernels.cross_pairs(self.rects, other.rects, halo)

    def owner_pairs(self, halo: int) -> list:
        """Distinct owner pairs ``(a, b)``, ``a < b``, with a rect pair in range."""
        p = self.pairs(halo)
        if len(p) == 0:
            return []
        o = self.owners[p]
        o = o[o[:, 0] != o[:, 1]]
        o.sort(axis=1)
        return sorted(set(map(tuple, o.tolist())))

    def owner_cross(self, other: "IntervalIndex", halo: int) -> list:
        p = self.cross(other, halo)
        if len(p) == 0:
            return []
        return sorted(set(zip(self.owners[p[:, 0]].tolist(), other.owners[p[:, 1]].tolist())))


def transform_rects(rects: np.ndarray, rotation: int = 0, mirror: bool = False, dx: int = 0, dy: int = 0) -> np.ndarray:
    """Mirror about the x axis, rotate counterclockwise by a multiple of 90°, translate."""
    r = _as_rect_array(rects).copy()
    if mirror:
        r[:, [1, 3]] = -r[:, [3, 1]]
    rot = rotation % 360
    if rot == 90:
        r = np.stack([-r[:, 3], r[:, 0], -r[:, 1], r[:, 2]], axis=1)
    elif rot == 180:
        r = np.stack([-r[:, 2], -r[:, 3], -r[:, 0], -r[:, 1]], axis=1)
    elif rot == 270:
        r = np.stack([r[:, 1], -r[:, 2], r[:, 3], -r[:, 0]], axis=1)
    elif rot != 0:
        raise GeometryError(f"rotation must be a multiple of 90 degrees, got {rotation}")
    r += np.array([dx, dy, dx, dy], dtype=np.int64)
    return np.ascontiguousarray(r)


def transform_point(p, rotation: int = 0, mirror: bool = False, dx: int = 0, dy: int = 0) -> Point:
    x, y = p
    if mirror:
        y = -y
    rot = rotation % 360
    for _ in range(rot // 90):
        x, y = -y, x
    return Point(x + dx, y + dy)
