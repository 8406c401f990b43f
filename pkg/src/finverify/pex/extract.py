"""Layout-level parasitic extraction.

Every resistive shape is cut into its canonical rectangles.  Points of
interest on a rectangle (pins, device terminals, contacts, junctions with
neighbouring rectangles) become ports; ports are ordered along the
rectangle's long axis and chained with sheet resistors ``Rs * dx / w``.
Contacts and vias add their lumped resistance; zero-ohm connections merge
ports into one node.  Nodes are named ``<net>:seg<k>``.
"""

from __future__ import annotations

import json
import warnings
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from finverify import kernels
from finverify.geometry import Rect, ShapeSet, boolean_intersect
from finverify.netex.extract import Extraction, ShapeRef, _pairs, _shape_at, _view_keys
from finverify.netex.netlist import GND, ParasiticElement
from finverify.pex.models import (
    ModelValidityWarning,
    WireGeometry,
    cap_parallel_plate,
    cap_plate_with_fringe,
    cap_sakurai_coupling,
    cap_sakurai_total,
)
from finverify.techdb import TechDB

MODELS = ("plate", "sakurai", "sakurai+coupling")
# lateral gate/contact faces and vertical contact/M1 overlaps
GATE_CONTACT_PAIRS = (("GATE", "AIL1"), ("GIL", "AIL1"))
CONTACT_CONTACT_LOWER = ("GIL", "AIL2")
CONTACT_CONTACT_UPPER = "M1"


class PexError(ValueError):
    pass


@dataclass
class PexResult:
    elements: list
    terminal_nodes: dict  # (device id, role) -> node
    pin_nodes: dict  # net -> node
    node_net: dict  # node -> net
    warnings: list = field(default_factory=list)

    def report(self) -> dict:
        nets = sorted(set(self.node_net.values()))
        out = {n: {"C_ground_aF": 0.0, "C_coupling_aF": 0.0, "R_total_ohm": 0.0} for n in nets}
        for e in self.elements:
            if e.kind == "R":
                out[self.node_net[e.a]]["R_total_ohm"] += e.value
            elif GND in (e.a, e.b):
                n = e.a if e.b == GND else e.b
                out[self.node_net[n]]["C_ground_aF"] += e.value
            else:
                na, nb = self.node_net[e.a], self.node_net[e.b]
                out[na]["C_coupling_aF"] += e.value
                if nb != na:
                    out[nb]["C_coupling_aF"] += e.value
        return out

    def report_json(self, model: str = "") -> str:
        rep = {n: {k: round(v, 9) for k, v in d.items()} for n, d in self.report().items()}
        doc = {"model": model, "nets": rep, "validity_warnings": len(self.warnings)}
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def layer_k(tech: TechDB, layer: str) -> float:
    """Effective permittivity between a conductor's bottom and the substrate."""
    e = tech.layer(layer).electrical
    return tech.dielectrics.k_series(0, e.height_nm) if e.height_nm > 0 else tech.dielectrics.slabs[0].k


# ---------------------------------------------------------------------------
# port graph


class _Ports:
    def __init__(self):
        self.parent = []
        self.where = []  # (ShapeRef, rect index, (x, y))
        self.by_rect = defaultdict(list)
        self.res = []  # (port a, port b, ohms, origin)

    def add(self, ref: ShapeRef, j: int, pt) -> int:
        k = len(self.parent)
        self.parent.append(k)
        self.where.append((ref, j, (int(pt[0] * 2), int(pt[1] * 2))))  # half-nm exact
        self.by_rect[(ref, j)].append(k)
        return k

    def find(self, k):
        while self.parent[k] != k:
            self.parent[k] = self.parent[self.parent[k]]
            k = self.parent[k]
        return k

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _rect_at(rects: np.ndarray, pt) -> int:
    x, y = pt
    hit = np.nonzero((rects[:, 0] <= x) & (x <= rects[:, 2]) & (rects[:, 1] <= y) & (y <= rects[:, 3]))[0]
    if len(hit) == 0:
        raise PexError(f"point {pt} is not on the shape")
    return int(hit[0])


def _center(r) -> tuple:
    return ((r[0] + r[2]) / 2, (r[1] + r[3]) / 2)


def _contact_points(pa, pb) -> list:
    """One point per connected overlap region of two polygons."""
    inter = boolean_intersect(ShapeSet("_a", (pa,)), ShapeSet("_b", (pb,)))
    return [_center(p.rects[0]) for p in inter.polygons]


def _edge_pairs(ra: np.ndarray, rb: np.ndarray, same: bool):
    """Rect pairs sharing an edge segment or overlapping, with the contact point."""
    p = kernels.self_pairs(ra, 0) if same else kernels.cross_pairs(ra, rb, 0)
    other = ra if same else rb
    for i, j in p.tolist():
        a, b = ra[i], other[j]
        x0, x1 = max(a[0], b[0]), min(a[2], b[2])
        y0, y1 = max(a[1], b[1]), min(a[3], b[3])
        if x1 < x0 or y1 < y0 or (x1 == x0 and y1 == y0):
            continue
        yield i, j, ((x0 + x1) / 2, (y0 + y1) / 2)


def _upper(tech, a, b):
    ea, eb = tech.layer(a).electrical, tech.layer(b).electrical
    return a if ea.height_nm >= eb.height_nm else b


def build_ports(ex: Extraction, tech: TechDB) -> _Ports:
    view = ex.view
    P = _Ports()

    def port_on(ref: ShapeRef, pt) -> int:
        rects = view[ref.layer].polygons[ref.index].rects
        return P.add(ref, _rect_at(rects, pt), pt)

    # junctions inside a polygon
    for key, s in view.items():
        for k, poly in enumerate(s.polygons):
            ref = ShapeRef(key, k)
            if len(poly.rects) > 1:
                for i, j, pt in _edge_pairs(poly.rects, None, True):
                    P.union(P.add(ref, i, pt), P.add(ref, j, pt))

    # stitched colour families
    done = set()
    for key in view:
        ld = tech.layer(key)
        if ld.cls in ("ACTIVE", "GATE"):
            continue
        fam = tuple(k for k in tech.family_members(key) if k in view)
        if fam in done:
            continue
        done.add(fam)
        for ia, a in enumerate(fam):
            for b in fam[ia + 1 :]:
                for x, y in sorted(_pairs(view[a], view[b], "touch")):
                    pa, pb = view[a].polygons[x], view[b].polygons[y]
                    for i, j, pt in _edge_pairs(pa.rects, pb.rects, False):
                        P.union(P.add(ShapeRef(a, x), i, pt), P.add(ShapeRef(b, y), j, pt))
                        break

    # contacts and vias
    for c in tech.connectivity:
        ka, kb = _view_keys(tech, c.layer_a, view), _view_keys(tech, c.layer_b, view)
        if c.mode == "OVERLAP":
            for a in ka:
                for b in kb:
                    up = _upper(tech, a, b)
                    ohm = tech.layer(up).electrical.via_resistance_ohm or 0.0
                    for x, y in sorted(_pairs(view[a], view[b], "overlap")):
                        for pt in _contact_points(view[a].polygons[x], view[b].polygons[y]):
                            pa, pb = port_on(ShapeRef(a, x), pt), port_on(ShapeRef(b, y), pt)
                            P.res.append((pa, pb, ohm, "VIA"))
        elif c.via in view:
            ohm = tech.layer(c.via).electrical.via_resistance_ohm
            v = view[c.via]
            for side, keys in (("lower", ka), ("upper", kb)):
                for k in keys:
                    for x, y in sorted(_pairs(v, view[k], "overlap")):
                        vpoly = v.polygons[x]
                        vport = P.add(ShapeRef(c.via, x), 0, _center(vpoly.rects[0]))
                        for pt in _contact_points(vpoly, view[k].polygons[y]):
                            sp = port_on(ShapeRef(k, y), pt)
                            if side == "lower":
                                P.res.append((sp, vport, ohm, "VIA"))
                            else:
                                P.union(sp, vport)
    return P


def _terminal_ports(P: _Ports, ex: Extraction, tech: TechDB) -> tuple:
    view = ex.view
    act = next(n for n, ld in tech.layers.items() if ld.cls == "ACTIVE")
    horiz = tech.fin_direction == "horizontal"
    term, pins = {}, {}

    def port_on(ref, pt):
        rects = view[ref.layer].polygons[ref.index].rects
        return P.add(ref, _rect_at(rects, pt), pt)

    diff = view.get(act)
    for dev, ch, gref in ex.channels:
        if dev is None:
            continue
        term[(dev.id, "g")] = port_on(gref, _center(ch))
        if horiz:
            sp, dp = (ch.x0, (ch.y0 + ch.y1) / 2), (ch.x1, (ch.y0 + ch.y1) / 2)
        else:
            sp, dp = ((ch.x0 + ch.x1) / 2, ch.y0), ((ch.x0 + ch.x1) / 2, ch.y1)
        for role, pt in (("s", sp), ("d", dp)):
            k = next(i for i, poly in enumerate(diff.polygons) if poly.contains_point(pt) and _touches_side(poly, ch, role, horiz))
            term[(dev.id, role)] = port_on(ShapeRef(act, k), pt)
    for p in ex.pins:
        ref = _shape_at(view, tech, p.layer, p.at)
        pins.setdefault(p.net, port_on(ref, p.at))
    return term, pins


def _touches_side(poly, ch: Rect, role: str, horiz: bool) -> bool:
    b = poly.bbox
    if horiz:
        return b.x1 <= ch.x0 if role == "s" else b.x0 >= ch.x1
    return b.y1 <= ch.y0 if role == "s" else b.y0 >= ch.y1


# ---------------------------------------------------------------------------
# main entry


def extract_parasitics(ex: Extraction, tech: TechDB, model: str = "sakurai+coupling") -> PexResult:
    if model not in MODELS:
        raise PexError(f"unknown model {model!r}; choose from {MODELS}")
    view = ex.view
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ModelValidityWarning)
        P = build_ports(ex, tech)
        term, pins = _terminal_ports(P, ex, tech)

        # every rectangle gets at least one port
        for key, s in view.items():
            for k, poly in enumerate(s.polygons):
                for j, r in enumerate(poly.rects):
                    if not P.by_rect.get((ShapeRef(key, k), j)):
                        P.add(ShapeRef(key, k), j, _center(r))

        # sheet resistance chains
        sheet = []
        for (ref, j), ports in sorted(P.by_rect.items(), key=lambda kv: (kv[0][0].layer, kv[0][0].index, kv[0][1])):
            e = tech.layer(ref.layer).electrical
            r = view[ref.layer].polygons[ref.index].rects[j]
            w, h = int(r[2] - r[0]), int(r[3] - r[1])
            if tech.layer(ref.layer).cls == "VIA" or e is None or e.resistivity_ohm_um is None:
                base = ports[0]
                for q in ports[1:]:
                    P.union(base, q)
                continue
            if tech.layer(ref.layer).cls == "ACTIVE":  # current flows along the fins
                axis = 0 if tech.fin_direction == "horizontal" else 1
            else:
                axis = 0 if w >= h else 1
            width = h if axis == 0 else w
            rs = tech.sheet_resistance(ref.layer)
            order = sorted(ports, key=lambda q: (P.where[q][2][axis], q))
            for a, b in zip(order, order[1:]):
                dpos = (P.where[b][2][axis] - P.where[a][2][axis]) / 2
                if dpos == 0:
                    P.union(a, b)
                else:
                    sheet.append((a, b, rs * dpos / width, "SHEET"))

        nodes = _name_nodes(P, ex, tech)
        node_of = lambda q: nodes[P.find(q)]  # noqa: E731
        raw = []
        for a, b, ohm, origin in P.res + sheet:
            na, nb = node_of(a), node_of(b)
            if na == nb:
                continue
            if ohm <= 0:
                raise PexError(f"non-positive resistance between {na} and {nb}")
            raw.append(ParasiticElement("R", na, nb, ohm, origin))

        first_node = {}
        rect_nodes = {}
        for (ref, j), ports in P.by_rect.items():
            ns = sorted({node_of(q) for q in ports}, key=_node_sort)
            rect_nodes[(ref, j)] = ns
            first_node[(ref, j)] = min(ns, key=lambda n: _node_sort(n))

        raw += _ground_caps(ex, tech, model, rect_nodes)
        raw += _gate_overhang_caps(ex, tech, rect_nodes)
        if model == "sakurai+coupling":
            raw += _coupling_caps(ex, tech, first_node)
        raw += _contact_caps(ex, tech, model, first_node)

    elements = aggregate(raw)
    node_net = {}
    for q in range(len(P.parent)):
        ref = P.where[q][0]
        node_net[node_of(q)] = ex.nets[ex.shape_net[ref]].name
    msgs = sorted({str(w.message) for w in caught if issubclass(w.category, ModelValidityWarning)})
    return PexResult(
        elements,
        {k: node_of(q) for k, q in sorted(term.items())},
        {n: node_of(q) for n, q in sorted(pins.items())},
        node_net,
        msgs,
    )


def _node_sort(n: str):
    net, _, seg = n.rpartition(":seg")
    return (net, int(seg) if seg.isdigit() else 0)


def _name_nodes(P: _Ports, ex: Extraction, tech: TechDB) -> dict:
    order = tech.layer_order
    key_of = {}
    for q in range(len(P.parent)):
        ref, _, (x2, y2) = P.where[q]
        root = P.find(q)
        k = (order.get(ref.layer, 0), y2, x2, ref.index)
        if root not in key_of or k < key_of[root]:
            key_of[root] = k
    by_net = defaultdict(list)
    for root in key_of:
        net = ex.nets[ex.shape_net[P.where[root][0]]].name
        by_net[net].append(root)
    names = {}
    for net, roots in by_net.items():
        for k, root in enumerate(sorted(roots, key=key_of.get), start=1):
            names[root] = f"{net}:seg{k}"
    return names


def aggregate(elements) -> list:
    """Merge elements sharing (kind, nodes, origin): capacitors add, resistors combine in parallel."""
    acc = {}
    for e in elements:
        k = e.key()
        if k not in acc:
            acc[k] = e.value
        elif e.kind == "C":
            acc[k] += e.value
        else:
            acc[k] = 1.0 / (1.0 / acc[k] + 1.0 / e.value)
    out = [ParasiticElement(kind, a, b, float(v), origin) for (kind, a, b, origin), v in acc.items() if v > 0]
    return sorted(out, key=ParasiticElement.key)


# ---------------------------------------------------------------------------
# capacitance


def _wire_layers(tech: TechDB, view: dict) -> list:
    return [k for k in view if tech.layer(k).cls in ("METAL", "MOL")]


def wire_ground_cap(tech: TechDB, layer: str, w_nm: int, len_nm: int, model: str) -> tuple:
    """(value aF, origin) of a straight wire segment to the substrate."""
    e = tech.layer(layer).electrical
    k = layer_k(tech, layer)
    g = WireGeometry.from_nm(w_nm, e.thickness_nm, e.height_nm, len_nm)
    if model == "plate":
        return cap_parallel_plate(g.w * g.length, g.h, k), "PLATE"
    return cap_sakurai_total(g, k), "FRINGE"


def _ground_caps(ex, tech, model, rect_nodes) -> list:
    out = []
    for key in _wire_layers(tech, ex.view):
        for k, poly in enumerate(ex.view[key].polygons):
            for j, r in enumerate(poly.rects):
                w, h = int(r[2] - r[0]), int(r[3] - r[1])
                val, origin = wire_ground_cap(tech, key, min(w, h), max(w, h), model)
                ns = rect_nodes[(ShapeRef(key, k), j)]
                for n in ns:
                    out.append(ParasiticElement("C", n, GND, val / len(ns), origin))
    return out


def _gate_overhang_caps(ex, tech, rect_nodes) -> list:
    """Gate-to-substrate plate term over the gate area not sitting on a channel."""
    gate = next(n for n, ld in tech.layers.items() if ld.cls == "GATE" and ld.base is None)
    if gate not in ex.view:
        return []
    e = tech.layer(gate).electrical
    k = layer_k(tech, gate)
    chans = np.array([tuple(ch) for _, ch, _ in ex.channels], dtype=np.int64).reshape(-1, 4)
    out = []
    for gi, poly in enumerate(ex.view[gate].polygons):
        for j, r in enumerate(poly.rects):
            area = int((r[2] - r[0]) * (r[3] - r[1]))
            if len(chans):
                ox = np.clip(np.minimum(chans[:, 2], r[2]) - np.maximum(chans[:, 0], r[0]), 0, None)
                oy = np.clip(np.minimum(chans[:, 3], r[3]) - np.maximum(chans[:, 1], r[1]), 0, None)
                area -= int((ox * oy).sum())
            if area <= 0:
                continue
            val = cap_parallel_plate(area / 1e6, e.height_nm / 1000, k)
            ns = rect_nodes[(ShapeRef(gate, gi), j)]
            for n in ns:
                out.append(ParasiticElement("C", n, GND, val / len(ns), "FRINGE"))
    return out


def _facing(a, b):
    """(run, gap, axis) for two rects facing across a gap, else None.

    ``axis`` is 0 when the run is along x (rects separated in y).
    """
    ox = min(a[2], b[2]) - max(a[0], b[0])
    oy = min(a[3], b[3]) - max(a[1], b[1])
    if ox >= 1 and oy < 0:
        return int(ox), int(-oy), 0
    if oy >= 1 and ox < 0:
        return int(oy), int(-ox), 1
    return None


def coupling_value(tech: TechDB, layer: str, wa: int, wb: int, run: int, gap: int) -> float:
    """Symmetric coupling: mean of the closed form evaluated with either width."""
    e = tech.layer(layer).electrical
    k = layer_k(tech, layer)
    ca = cap_sakurai_coupling(WireGeometry.from_nm(wa, e.thickness_nm, e.height_nm, run, gap), k)
    cb = cap_sakurai_coupling(WireGeometry.from_nm(wb, e.thickness_nm, e.height_nm, run, gap), k)
    return (ca + cb) / 2


def _rect_table(ex, keys):
    rows, refs = [], []
    for key in keys:
        for k, poly in enumerate(ex.view[key].polygons):
            for j, r in enumerate(poly.rects):
                rows.append(r)
                refs.append((ShapeRef(key, k), j))
    return (np.array(rows, dtype=np.int64).reshape(-1, 4), refs)


def _coupling_caps(ex, tech, first_node) -> list:
    out, done = [], set()
    for key in _wire_layers(tech, ex.view):
        fam = tuple(k for k in tech.family_members(key) if k in ex.view)
        if fam in done:
            continue
        done.add(fam)
        e = tech.layer(key).electrical
        window = int(tech.coupling_window_factor * e.height_nm)
        rects, refs = _rect_table(ex, fam)
        for i, j in kernels.self_pairs(rects, window).tolist():
            (ra, ja), (rb, jb) = refs[i], refs[j]
            if ex.shape_net[ra] == ex.shape_net[rb]:
                continue
            f = _facing(rects[i], rects[j])
            if f is None or f[1] > window:
                continue
            run, gap, axis = f
            wa = rects[i][3] - rects[i][1] if axis == 0 else rects[i][2] - rects[i][0]
            wb = rects[j][3] - rects[j][1] if axis == 0 else rects[j][2] - rects[j][0]
            val = coupling_value(tech, key, int(wa), int(wb), run, gap)
            out.append(ParasiticElement("C", first_node[(ra, ja)], first_node[(rb, jb)], val, "COUPLING"))
    return out


def _contact_caps(ex, tech, model, first_node) -> list:
    out = []
    view = ex.view
    dz = tech.dielectrics

    # lateral faces between gate / gate contact and the active contact
    for la, lb in GATE_CONTACT_PAIRS:
        if la not in view or lb not in view:
            continue
        ea, eb = tech.layer(la).electrical, tech.layer(lb).electrical
        z0 = max(ea.height_nm, eb.height_nm)
        z1 = min(ea.height_nm + ea.thickness_nm, eb.height_nm + eb.thickness_nm)
        if z1 <= z0:
            continue
        k = dz.k_parallel(z0, z1)
        window = int(tech.coupling_window_factor * (z1 - z0))
        ra, refa = _rect_table(ex, [la])
        rb, refb = _rect_table(ex, [lb])
        for i, j in kernels.cross_pairs(ra, rb, window).tolist():
            if ex.shape_net[refa[i][0]] == ex.shape_net[refb[j][0]]:
                continue
            f = _facing(ra[i], rb[j])
            if f is None or f[1] > window:
                continue
            run, gap, axis = f
            na = ra[i][2] - ra[i][0] if axis == 1 else ra[i][3] - ra[i][1]
            nb = rb[j][2] - rb[j][0] if axis == 1 else rb[j][3] - rb[j][1]
            a, b, d = run / 1000, (z1 - z0) / 1000, gap / 1000
            if model == "plate":
                val = cap_parallel_plate(a * b, d, k)
            else:
                val = cap_plate_with_fringe(a, b, d, min(na, nb) / 1000, k)
            out.append(ParasiticElement("C", first_node[refa[i]], first_node[refb[j]], val, "GATE_CONTACT"))

    # vertical overlaps between MOL contacts and first metal
    upper = [k for k in tech.family_members(CONTACT_CONTACT_UPPER) if k in view] if CONTACT_CONTACT_UPPER in tech.layers else []
    if not upper:
        return out
    ru, refu = _rect_table(ex, upper)
    eu = tech.layer(CONTACT_CONTACT_UPPER).electrical
    for lo in CONTACT_CONTACT_LOWER:
        if lo not in view:
            continue
        el = tech.layer(lo).electrical
        top = el.height_nm + el.thickness_nm
        d_nm = eu.height_nm - top
        if d_nm <= 0:
            continue
        k = dz.k_series(top, eu.height_nm)
        rl, refl = _rect_table(ex, [lo])
        for i, j in kernels.cross_pairs(rl, ru, -1).tolist():
            if ex.shape_net[refl[i][0]] == ex.shape_net[refu[j][0]]:
                continue
            ox = min(rl[i][2], ru[j][2]) - max(rl[i][0], ru[j][0])
            oy = min(rl[i][3], ru[j][3]) - max(rl[i][1], ru[j][1])
            a, b, d = ox / 1000, oy / 1000, d_nm / 1000
            if model == "plate":
                val = cap_parallel_plate(a * b, d, k)
            else:
                val = cap_plate_with_fringe(a, b, d, min(el.thickness_nm, eu.thickness_nm) / 1000, k)
            out.append(ParasiticElement("C", first_node[refl[i]], first_node[refu[j]], val, "CONTACT_CONTACT"))
    return out


