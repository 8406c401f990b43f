"""Connectivity extraction and FinFET device recognition."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from finverify import kernels
from finverify.geometry import (
    Rect,
    ShapeSet,
    boolean_intersect,
    boolean_subtract,
    merge_sets,
    overlap_area,
)
from finverify.layoutio import FlatLayout
from finverify.netex.netlist import FinDevice, Netlist, n_fin_from_width
from finverify.techdb import TechDB

CONDUCTING = ("ACTIVE", "GATE", "MOL", "METAL", "VIA")


class ExtractionError(ValueError):
    pass


class LabelConflictError(ExtractionError):
    """Strict-mode short between differently labeled pins."""


class LabelConflictWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ShapeRef:
    layer: str
    index: int


@dataclass(frozen=True)
class Net:
    id: int
    name: str
    members: tuple
    labels: tuple = ()


@dataclass
class Extraction:
    """Everything downstream stages need: view geometry, nets and devices."""

    name: str
    view: dict  # view layer -> ShapeSet
    nets: list
    shape_net: dict  # ShapeRef -> net id
    devices: list
    channels: list = field(default_factory=list)  # (device or None, channel Rect, gate ShapeRef)
    shorts: list = field(default_factory=list)
    pins: tuple = ()

    def net_name(self, ref: ShapeRef) -> str:
        return self.nets[self.shape_net[ref]].name

    @property
    def net_names(self) -> dict:
        return {n.id: n.name for n in self.nets}

    def netlist(self) -> Netlist:
        ports = tuple(sorted(n.name for n in self.nets if n.labels))
        used = {t for d in self.devices for t in d.terminals().values()}
        names = {n.name for n in self.nets} | used
        return Netlist(self.name, ports, tuple(self.devices), tuple(sorted(names)))


# ---------------------------------------------------------------------------
# extraction view


def _gate_base(tech: TechDB) -> str:
    return next(n for n, ld in tech.layers.items() if ld.cls == "GATE" and ld.base is None)


def _act_name(tech: TechDB) -> str:
    return next(n for n, ld in tech.layers.items() if ld.cls == "ACTIVE")


def effective_gate(layout: FlatLayout, tech: TechDB) -> ShapeSet:
    """Union of the gate colour family minus the gate-cut layer."""
    base = _gate_base(tech)
    gates = merge_sets(base, layout.family(tech.family_members(base)))
    cut = merge_sets("GATE_CUT", layout.family(tech.by_class("GATE_CUT")))
    return boolean_subtract(gates, cut) if cut else gates


def extraction_view(layout: FlatLayout, tech: TechDB) -> dict:
    """Conducting geometry as seen by the extractor.

    Active becomes diffusion (active minus effective gate) and the gate
    family collapses into the effective gate; other conducting layers are
    taken as drawn.
    """
    act_name, gate_name = _act_name(tech), _gate_base(tech)
    gate = effective_gate(layout, tech)
    act = layout.layer(act_name)
    view = {}
    for name, ld in tech.layers.items():
        if ld.cls not in CONDUCTING:
            continue
        if ld.cls == "ACTIVE":
            s = boolean_subtract(act, gate) if gate else act
            view[act_name] = s.with_layer(act_name)
        elif ld.cls == "GATE":
            view.setdefault(gate_name, gate.with_layer(gate_name))
        elif name in layout.layers:
            view[name] = layout.layers[name]
    return {k: v for k, v in view.items() if v}


def _view_keys(tech: TechDB, name: str, view: dict) -> list:
    ld = tech.layer(name)
    if ld.cls == "ACTIVE":
        keys = [_act_name(tech)]
    elif ld.cls == "GATE":
        keys = [_gate_base(tech)]
    else:
        keys = tech.family_members(name)
    return [k for k in keys if k in view]


def _pairs(a: ShapeSet, b: ShapeSet, mode: str) -> set:
    """Polygon pairs of ``a`` x ``b`` that overlap (``mode='overlap'``) or share an edge or area (``'touch'``)."""
    ra, rb = a.rects, b.rects
    p = kernels.cross_pairs(ra, rb, 0)
    if len(p) == 0:
        return set()
    A, B = ra[p[:, 0]], rb[p[:, 1]]
    gx = np.maximum(B[:, 0] - A[:, 2], A[:, 0] - B[:, 2])
    gy = np.maximum(B[:, 1] - A[:, 3], A[:, 1] - B[:, 3])
    if mode == "overlap":
        keep = (gx < 0) & (gy < 0)
    else:  # shared boundary of positive length or overlap; a corner contact is not a connection
        keep = (gx <= 0) & (gy <= 0) & ~((gx == 0) & (gy == 0))
    p = p[keep]
    return set(zip(a.owners[p[:, 0]].tolist(), b.owners[p[:, 1]].tolist()))


def connection_edges(view: dict, tech: TechDB) -> list:
    """Shape-level connections as ``(ShapeRef, ShapeRef)`` pairs."""
    edges = []
    # colour families: touching or overlapping members are one conductor
    seen_fam = set()
    for name in view:
        fam = tuple(k for k in tech.family_members(name) if k in view) if tech.layer(name).cls not in ("ACTIVE", "GATE") else (name,)
        if fam in seen_fam or len(fam) < 2:
            continue
        seen_fam.add(fam)
        for i, a in enumerate(fam):
            for b in fam[i + 1 :]:
                edges += [(ShapeRef(a, x), ShapeRef(b, y)) for x, y in _pairs(view[a], view[b], "touch")]
    for c in tech.connectivity:
        ka, kb = _view_keys(tech, c.layer_a, view), _view_keys(tech, c.layer_b, view)
        if c.mode == "OVERLAP":
            for a in ka:
                for b in kb:
                    edges += [(ShapeRef(a, x), ShapeRef(b, y)) for x, y in _pairs(view[a], view[b], "overlap")]
        else:
            if c.via not in view:
                continue
            v = view[c.via]
            for k in ka + kb:
                edges += [(ShapeRef(c.via, x), ShapeRef(k, y)) for x, y in _pairs(v, view[k], "overlap")]
    return edges


# ---------------------------------------------------------------------------
# nets


def _shape_at(view: dict, tech: TechDB, layer: str, pt) -> ShapeRef | None:
    for key in _view_keys(tech, layer, view) if tech.layer(layer).cls in ("ACTIVE", "GATE") else [layer]:
        s = view.get(key)
        if s is None:
            continue
        for k, poly in enumerate(s.polygons):
            if poly.contains_point(pt):
                return ShapeRef(key, k)
    return None


def extract_connectivity(layout: FlatLayout, tech: TechDB, strict: bool = False, view: dict | None = None):
    """Union shapes into nets and name them from pin labels.

    Returns ``(view, nets, shape_net, shorts)``.  A component carrying
    several distinct labels is a short: in strict mode this raises, otherwise
    it is recorded and the net takes the lexicographically smallest label.
    """
    view = extraction_view(layout, tech) if view is None else view
    refs = [ShapeRef(k, i) for k in view for i in range(len(view[k]))]
    index = {r: n for n, r in enumerate(refs)}
    edges = connection_edges(view, tech)
    n = len(refs)
    if edges:
        e = np.array([(index[a], index[b]) for a, b in edges], dtype=np.int64)
        g = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
    else:
        g = coo_matrix((n, n))
    _, comp = connected_components(g, directed=False)

    labels = {}
    for p in layout.pins:
        ref = _shape_at(view, tech, p.layer, p.at)
        if ref is None:
            raise ExtractionError(f"pin {p.net} at {tuple(p.at)} does not land on extracted {p.layer} geometry")
        labels.setdefault(int(comp[index[ref]]), set()).add(p.net)

    shorts = []
    for c, labs in sorted(labels.items()):
        if len(labs) > 1:
            msg = "pin label conflict (short) between " + ", ".join(sorted(labs))
            if strict:
                raise LabelConflictError(msg)
            warnings.warn(msg, LabelConflictWarning, stacklevel=2)
            shorts.append(tuple(sorted(labs)))

    order = {r: (tech.layer_order.get(r.layer, 0), r.index) for r in refs}
    groups = {}
    for r in refs:
        groups.setdefault(int(comp[index[r]]), []).append(r)
    comps = sorted(groups, key=lambda c: min(order[r] for r in groups[c]))

    nets, shape_net, used, anon = [], {}, {}, 0
    for nid, c in enumerate(comps):
        labs = tuple(sorted(labels.get(c, ())))
        if labs:
            base = labs[0]
            used[base] = used.get(base, 0) + 1
            name = base if used[base] == 1 else f"{base}_{used[base]}"
        else:
            anon += 1
            name = f"n{anon}"
        members = tuple(sorted(groups[c], key=order.get))
        nets.append(Net(nid, name, members, labs))
        for r in members:
            shape_net[r] = nid
    # synthesized names must not collide with labels
    taken = {n.name for n in nets if n.labels}
    for k, net in enumerate(nets):
        if not net.labels and net.name in taken:
            nets[k] = Net(net.id, f"{net.name}_", net.members, ())
    return view, nets, shape_net, shorts


# ---------------------------------------------------------------------------
# devices


def _adjacent(diff: ShapeSet, ch: Rect, side: str) -> list:
    """Diffusion polygons sharing the channel's left or right edge."""
    x = ch.x0 if side == "left" else ch.x1
    r = diff.rects
    if len(r) == 0:
        return []
    edge = r[:, 2] == x if side == "left" else r[:, 0] == x
    ov = (np.minimum(r[:, 3], ch.y1) - np.maximum(r[:, 1], ch.y0)) > 0
    return sorted(set(diff.owners[edge & ov].tolist()))


def _adjacent_v(diff: ShapeSet, ch: Rect, side: str) -> list:
    y = ch.y0 if side == "left" else ch.y1
    r = diff.rects
    if len(r) == 0:
        return []
    edge = r[:, 3] == y if side == "left" else r[:, 1] == y
    ov = (np.minimum(r[:, 2], ch.x1) - np.maximum(r[:, 0], ch.x0)) > 0
    return sorted(set(diff.owners[edge & ov].tolist()))


def recognize_devices(layout: FlatLayout, tech: TechDB, view: dict, nets: list, shape_net: dict):
    """FinFETs at every effective-gate / active crossing with diffusion on both sides.

    Returns ``(devices, channels)``; ``channels`` also lists the dummy gates.
    """
    act_name, gate_name = _act_name(tech), _gate_base(tech)
    horiz = tech.fin_direction == "horizontal"
    gate = view.get(gate_name, ShapeSet(gate_name))
    diff = view.get(act_name, ShapeSet(act_name))
    act = layout.layer(act_name)
    if not gate or not act:
        return [], []
    chans = boolean_intersect(act, gate)
    well = merge_sets("WELL", layout.family(tech.by_class("WELL")))
    adj = _adjacent if horiz else _adjacent_v
    names = {n.id: n.name for n in nets}

    found = []
    for poly in chans.polygons:
        if not poly.is_rect:
            raise ExtractionError(f"non-rectangular channel at {tuple(poly.bbox)}")
        ch = poly.bbox
        left, right = adj(diff, ch, "left"), adj(diff, ch, "right")
        g = _gate_of(gate, ch)
        found.append((ch, left, right, g))

    # which diffusion polygons border a real (non-dummy) channel
    border = {}
    for k, (ch, left, right, g) in enumerate(found):
        if left and right:
            for d in left + right:
                border.setdefault(d, set()).add(k)

    devices, channels = [], []
    fin = tech.fin
    bulk_names = dict(tech.bulk_nets)
    for k, (ch, left, right, g) in enumerate(found):
        if not (left and right):
            channels.append((None, ch, ShapeRef(gate_name, g)))
            continue
        if len(left) > 1 or len(right) > 1:
            raise ExtractionError(f"channel at {tuple(ch)} borders several diffusion regions on one side")
        width = ch.height if horiz else ch.width
        L = ch.width if horiz else ch.height
        try:
            n_fin = n_fin_from_width(width, fin.w_fin, fin.pitch_fin)
        except ValueError as exc:
            raise ExtractionError(f"device at {tuple(ch)}: {exc}") from None
        if L not in fin.allowed_gate_lengths:
            raise ExtractionError(f"device at {tuple(ch)}: gate length {L} nm not in {sorted(fin.allowed_gate_lengths)}")
        kind = "PFIN" if well and overlap_area(poly_rect(ch), well) > 0 else "NFIN"

        def l_fin(d):
            b = diff.polygons[d].bbox
            ext = b.width if horiz else b.height
            shared = len(border.get(d, ())) > 1
            return Fraction(ext, 2) if shared else ext

        s_ref, d_ref = ShapeRef(act_name, left[0]), ShapeRef(act_name, right[0])
        bulk = bulk_names.get(kind, "VDD" if kind == "PFIN" else "VSS")
        dev = FinDevice(
            id=0,
            kind=kind,
            drain=names[shape_net[d_ref]],
            gate=names[shape_net[ShapeRef(gate_name, g)]],
            source=names[shape_net[s_ref]],
            bulk=bulk,
            n_fin=n_fin,
            L=L,
            w_fin=fin.w_fin,
            l_fin_d=_plain(l_fin(right[0])),
            l_fin_s=_plain(l_fin(left[0])),
            location=ch,
        )
        devices.append(dev)
        channels.append((dev, ch, ShapeRef(gate_name, g)))
    devices.sort(key=lambda d: (d.location.y0, d.location.x0))
    renum = {id(d): i for i, d in enumerate(devices, start=1)}
    out = [_with_id(d, renum[id(d)]) for d in devices]
    by_loc = {d.location: d for d in out}
    channels = [(by_loc.get(ch) if dev is not None else None, ch, g) for dev, ch, g in channels]
    return out, channels


def _plain(v):
    return int(v) if isinstance(v, Fraction) and v.denominator == 1 else v


def _with_id(d: FinDevice, i: int) -> FinDevice:
    from dataclasses import replace

    return replace(d, id=i)


def poly_rect(r: Rect) -> ShapeSet:
    return ShapeSet.from_rects("_ch", [r])


def _gate_of(gate: ShapeSet, ch: Rect) -> int:
    r = gate.rects
    inside = (r[:, 0] <= ch.x0) & (r[:, 1] <= ch.y0) & (r[:, 2] >= ch.x1) & (r[:, 3] >= ch.y1)
    hit = gate.owners[inside]
    if len(hit):
        return int(hit[0])
    ov = (np.minimum(r[:, 2], ch.x1) > np.maximum(r[:, 0], ch.x0)) & (np.minimum(r[:, 3], ch.y1) > np.maximum(r[:, 1], ch.y0))
    return int(gate.owners[ov][0])


def extract(layout: FlatLayout, tech: TechDB, strict: bool = False) -> Extraction:
    """Full extraction pipeline: view, nets, devices."""
    view, nets, shape_net, shorts = extract_connectivity(layout, tech, strict)
    devices, channels = recognize_devices(layout, tech, view, nets, shape_net)
    used = {n.name for n in nets}
    for d in devices:
        if d.bulk not in used:
            nets.append(Net(len(nets), d.bulk, (), ()))
            used.add(d.bulk)
    return Extraction(layout.name, view, nets, shape_net, devices, channels, shorts, tuple(layout.pins))
