"""Technology database: layer stack, electrical data, connectivity and rule deck."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

LAYER_CLASSES = ("WELL", "ACTIVE", "GATE", "GATE_CUT", "MOL", "METAL", "VIA")
COLORS = ("NONE", "A", "B")
RULE_KINDS = (
    "MIN_WIDTH",
    "MIN_SPACING_SAME_COLOR",
    "MIN_SPACING_DIFF_COLOR",
    "MIN_AREA",
    "ENCLOSURE",
    "OVERLAP",
    "WIDTH_QUANTIZED",
    "DISCRETE_LENGTH",
    "RECT_ONLY",
)
N_METAL_LEVELS = 13
EPS0_AF_PER_UM = 8.854  # vacuum permittivity, aF/µm

DEFAULT_TECH = Path(__file__).resolve().parent / "data" / "freepdk15.json"


class TechError(ValueError):
    pass


@dataclass(frozen=True)
class LayerElectrical:
    thickness_nm: int
    height_nm: int
    resistivity_ohm_um: float | None = None
    via_resistance_ohm: float | None = None
    k_above: float = 1.0
    k_below: float = 1.0


@dataclass(frozen=True)
class LayerDef:
    name: str
    cls: str
    level: int
    color: str = "NONE"
    base: str | None = None
    electrical: LayerElectrical | None = None

    @property
    def family_base(self) -> str:
        return self.base or self.name


@dataclass(frozen=True)
class ConnectivityEntry:
    layer_a: str
    layer_b: str
    mode: str
    via: str | None = None


@dataclass(frozen=True)
class Rule:
    rule_id: str
    kind: str
    layers: tuple
    value: int | None = None
    other: tuple = ()
    outer: tuple = ()
    base: int | None = None
    step: int | None = None
    values: tuple = ()


@dataclass(frozen=True)
class FinParams:
    w_fin: int
    pitch_fin: int
    allowed_gate_lengths: frozenset


@dataclass(frozen=True)
class Slab:
    name: str
    bottom_nm: int
    top_nm: int
    k: float


@dataclass(frozen=True)
class DielectricStack:
    slabs: tuple

    def k_series(self, z0: float, z1: float) -> float:
        """Thickness-weighted series combination over ``[z0, z1]`` (field normal to slabs)."""
        total, acc = 0.0, 0.0
        for s in self.slabs:
            lo, hi = max(z0, s.bottom_nm), min(z1, s.top_nm)
            if hi > lo:
                total += hi - lo
                acc += (hi - lo) / s.k
        if total == 0:
            return self.slabs[-1].k if z0 >= self.slabs[-1].top_nm else self.slabs[0].k
        return total / acc

    def k_parallel(self, z0: float, z1: float) -> float:
        """Thickness-weighted mean over ``[z0, z1]`` (field parallel to slabs)."""
        total, acc = 0.0, 0.0
        for s in self.slabs:
            lo, hi = max(z0, s.bottom_nm), min(z1, s.top_nm)
            if hi > lo:
                total += hi - lo
                acc += (hi - lo) * s.k
        return acc / total if total else self.k_series(z0, z1)


@dataclass(frozen=True)
class SwitchModel:
    reference_length_nm: float
    r_on_ohm_per_fin: Mapping
    c_gate_af_per_fin: float
    cj_af_per_nm2: float
    cjsw_af_per_nm: float


@dataclass(frozen=True)
class TechDB:
    name: str
    layers: Mapping  # name -> LayerDef, in stack order
    connectivity: tuple
    rules: tuple
    fin: FinParams
    dielectrics: DielectricStack
    aliases: Mapping = field(default_factory=dict)
    fin_direction: str = "horizontal"
    bulk_nets: Mapping = field(default_factory=dict)
    switch_model: SwitchModel | None = None
    coupling_window_factor: float = 10.0

    def resolve(self, name: str) -> str:
        name = self.aliases.get(name, name)
        if name not in self.layers:
            raise TechError(f"unknown layer {name!r}")
        return name

    def layer(self, name: str) -> LayerDef:
        return self.layers[self.resolve(name)]

    @cached_property
    def layer_order(self) -> dict:
        return {n: i for i, n in enumerate(self.layers)}

    @cached_property
    def _families(self) -> dict:
        fam = {}
        for ld in self.layers.values():
            fam.setdefault(ld.family_base, []).append(ld.name)
        return {k: frozenset(v) for k, v in fam.items()}

    def color_family(self, name: str) -> frozenset:
        """All members of the layer's multi-patterning family (itself alone if uncolored)."""
        return self._families[self.layer(name).family_base]

    def family_members(self, name: str) -> list:
        """Family members in stack order."""
        fam = self.color_family(name)
        return [n for n in self.layers if n in fam]

    def by_class(self, cls: str) -> list:
        return [n for n, ld in self.layers.items() if ld.cls == cls]

    def sheet_resistance(self, name: str) -> float:
        """ρ / t in Ω per square."""
        ld = self.layer(name)
        e = ld.electrical
        if e is None or e.resistivity_ohm_um is None:
            raise TechError(f"layer {ld.name} has no resistivity")
        return e.resistivity_ohm_um / (e.thickness_nm / 1000.0)

    def metal_base(self, level: int) -> str:
        for n, ld in self.layers.items():
            if ld.cls == "METAL" and ld.level == level and ld.color == "NONE":
                return n
        raise TechError(f"no metal level {level}")

    def rule(self, rule_id: str) -> Rule:
        for r in self.rules:
            if r.rule_id == rule_id:
                return r
        raise KeyError(rule_id)


# ---------------------------------------------------------------------------
# loading


def _req(d, key, where):
    if key not in d:
        raise TechError(f"{where}: missing field {key!r}")
    return d[key]


def _int_nm(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise TechError(f"{where}: expected integer nm, got {v!r}")
    return int(v)


def parse_tech(doc: dict) -> TechDB:
    if doc.get("schema_version") != 1:
        raise TechError(f"unsupported schema_version {doc.get('schema_version')!r}")
    layers = {}
    for k, raw in enumerate(_req(doc, "layers", "tech")):
        where = f"layers[{k}]"
        name = _req(raw, "name", where)
        if name in layers:
            raise TechError(f"duplicate layer {name!r}")
        cls = _req(raw, "class", where)
        if cls not in LAYER_CLASSES:
            raise TechError(f"{name}: unknown class {cls!r}")
        color = raw.get("color", "NONE")
        if color not in COLORS:
            raise TechError(f"{name}: unknown color {color!r}")
        e = raw.get("electrical")
        elec = None
        if e is not None:
            elec = LayerElectrical(
                thickness_nm=_int_nm(_req(e, "thickness_nm", name), name),
                height_nm=_int_nm(_req(e, "height_nm", name), name),
                resistivity_ohm_um=e.get("resistivity_ohm_um"),
                via_resistance_ohm=e.get("via_resistance_ohm"),
                k_above=float(e.get("k_above", 1.0)),
                k_below=float(e.get("k_below", 1.0)),
            )
        layers[name] = LayerDef(name, cls, int(_req(raw, "level", where)), color, raw.get("base"), elec)

    fp = _req(doc, "fin_params", "tech")
    fin = FinParams(
        _int_nm(_req(fp, "w_fin_nm", "fin_params"), "fin_params"),
        _int_nm(_req(fp, "pitch_fin_nm", "fin_params"), "fin_params"),
        frozenset(_int_nm(v, "fin_params") for v in _req(fp, "allowed_gate_lengths_nm", "fin_params")),
    )
    conn = tuple(
        ConnectivityEntry(_req(c, "a", "connectivity"), _req(c, "b", "connectivity"), _req(c, "mode", "connectivity"), c.get("via"))
        for c in _req(doc, "connectivity", "tech")
    )
    rules = []
    for k, r in enumerate(_req(doc, "rules", "tech")):
        where = f"rules[{k}]"
        rules.append(
            Rule(
                rule_id=_req(r, "id", where),
                kind=_req(r, "kind", where),
                layers=tuple(_req(r, "layers", where)),
                value=r.get("value"),
                other=tuple(r.get("other", ())),
                outer=tuple(r.get("outer", ())),
                base=r.get("base"),
                step=r.get("step"),
                values=tuple(r.get("values", ())),
            )
        )
    slabs = tuple(
        Slab(s["name"], _int_nm(s["bottom_nm"], "dielectrics"), _int_nm(s["top_nm"], "dielectrics"), float(s["k"]))
        for s in doc.get("dielectrics", ())
    )
    sm = doc.get("switch_model")
    switch = None
    if sm is not None:
        switch = SwitchModel(
            float(sm["reference_length_nm"]),
            MappingProxyType(dict(sm["r_on_ohm_per_fin"])),
            float(sm["c_gate_af_per_fin"]),
            float(sm["cj_af_per_nm2"]),
            float(sm["cjsw_af_per_nm"]),
        )
    tech = TechDB(
        name=doc.get("name", "unnamed"),
        layers=MappingProxyType(layers),
        connectivity=conn,
        rules=tuple(rules),
        fin=fin,
        dielectrics=DielectricStack(slabs),
        aliases=MappingProxyType(dict(doc.get("aliases", {}))),
        fin_direction=doc.get("orientation", {}).get("fin_direction", "horizontal"),
        bulk_nets=MappingProxyType(dict(doc.get("bulk_nets", {}))),
        switch_model=switch,
        coupling_window_factor=float(doc.get("coupling_window_factor", 10)),
    )
    validate(tech)
    return tech


def validate(tech: TechDB) -> None:
    L = tech.layers
    for a, target in tech.aliases.items():
        if target not in L:
            raise TechError(f"alias {a!r} points at unknown layer {target!r}")
    for ld in L.values():
        if ld.base is not None:
            if ld.base not in L:
                raise TechError(f"{ld.name}: dangling base layer {ld.base!r}")
            b = L[ld.base]
            if ld.color == "NONE":
                raise TechError(f"{ld.name}: layer with a base must be colored A or B")
            if (b.cls, b.level) != (ld.cls, ld.level) or b.base is not None:
                raise TechError(f"{ld.name}: colored layer must share class and level with its base {b.name}")
        elif ld.color != "NONE":
            raise TechError(f"{ld.name}: colored layer without a base")
        e = ld.electrical
        if e is not None:
            if e.thickness_nm <= 0:
                raise TechError(f"{ld.name}: thickness must be > 0")
            if e.height_nm < 0:
                raise TechError(f"{ld.name}: height must be >= 0")
            if e.resistivity_ohm_um is not None and e.resistivity_ohm_um <= 0:
                raise TechError(f"{ld.name}: resistivity must be > 0")
            if e.via_resistance_ohm is not None and e.via_resistance_ohm <= 0:
                raise TechError(f"{ld.name}: via resistance must be > 0")
            if e.k_above < 1 or e.k_below < 1:
                raise TechError(f"{ld.name}: dielectric constant must be >= 1")

    cuts = [n for n, ld in L.items() if ld.cls == "GATE_CUT"]
    if len(cuts) != 1:
        raise TechError("missing GATE_CUT layer" if not cuts else f"more than one GATE_CUT layer: {cuts}")

    metals = sorted({ld.level for ld in L.values() if ld.cls == "METAL"})
    if metals != list(range(1, N_METAL_LEVELS + 1)):
        raise TechError(f"metal levels must be 1..{N_METAL_LEVELS}, got {metals}")
    heights = []
    for lvl in metals:
        base = tech.metal_base(lvl)
        e = L[base].electrical
        if e is None:
            raise TechError(f"{base}: metal layer without electrical data")
        heights.append(e.height_nm)
    if any(b <= a for a, b in zip(heights, heights[1:])):
        raise TechError("metal heights must strictly increase with level")

    f = tech.fin
    if not 0 < f.w_fin < f.pitch_fin:
        raise TechError("fin params: need 0 < W_fin < Pitch_fin")
    if not f.allowed_gate_lengths:
        raise TechError("fin params: allowed gate lengths empty")

    seen = set()
    for r in tech.rules:
        if r.rule_id in seen:
            raise TechError(f"duplicate rule_id {r.rule_id!r}")
        seen.add(r.rule_id)
        if r.kind not in RULE_KINDS:
            raise TechError(f"rule {r.rule_id}: unknown kind {r.kind!r}")
        for n in r.layers + r.other + r.outer:
            if n not in L:
                raise TechError(f"rule {r.rule_id}: dangling layer reference {n!r}")
        if not r.layers:
            raise TechError(f"rule {r.rule_id}: no layers")
        if r.kind == "WIDTH_QUANTIZED" and (not r.step or r.base is None):
            raise TechError(f"rule {r.rule_id}: quantized rule needs base and step")
        if r.kind == "DISCRETE_LENGTH" and not r.values:
            raise TechError(f"rule {r.rule_id}: discrete rule needs values")
        if r.kind == "MIN_SPACING_DIFF_COLOR" and not r.other:
            raise TechError(f"rule {r.rule_id}: diff-color rule needs 'other' layers")
        if r.kind in ("ENCLOSURE", "OVERLAP") and not r.outer:
            raise TechError(f"rule {r.rule_id}: needs 'outer' layers")
        if r.kind not in ("RECT_ONLY", "WIDTH_QUANTIZED", "DISCRETE_LENGTH") and r.value is None:
            raise TechError(f"rule {r.rule_id}: missing value")

    vias = {n for n, ld in L.items() if ld.cls == "VIA"}
    via_use = {}
    for c in tech.connectivity:
        for n in (c.layer_a, c.layer_b):
            if n not in L:
                raise TechError(f"connectivity: dangling layer reference {n!r}")
            if n in vias:
                raise TechError(f"connectivity: via layer {n} may only appear as the via of THROUGH_VIA")
        if c.mode == "THROUGH_VIA":
            if c.via not in vias:
                raise TechError(f"connectivity: {c.layer_a}-{c.layer_b} via {c.via!r} is not a VIA layer")
            via_use.setdefault(c.via, set()).add((L[c.layer_a].family_base, L[c.layer_b].family_base))
        elif c.mode != "OVERLAP":
            raise TechError(f"connectivity: unknown mode {c.mode!r}")
    for v in sorted(vias):
        pairs = via_use.get(v)
        if not pairs:
            raise TechError(f"via layer {v} is not used by any connectivity entry")
        uppers = {b for _, b in pairs}
        if len(uppers) != 1:
            raise TechError(f"via layer {v} connects to more than one upper level: {sorted(uppers)}")
        for a, b in pairs:
            la, lb = L[a], L[b]
            if la.cls == "METAL" and (lb.cls != "METAL" or lb.level != la.level + 1):
                raise TechError(f"via layer {v} must connect adjacent metal levels, got {a}-{b}")

    # everything conducting must reach the top metal
    adj = {}
    for c in tech.connectivity:
        a, b = L[c.layer_a].family_base, L[c.layer_b].family_base
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    top = tech.metal_base(N_METAL_LEVELS)
    stack, reach = [top], {top}
    while stack:
        for m in adj.get(stack.pop(), ()):
            if m not in reach:
                reach.add(m)
                stack.append(m)
    for ld in L.values():
        if ld.cls in ("ACTIVE", "GATE", "MOL", "METAL") and ld.family_base not in reach:
            raise TechError(f"layer {ld.name} is not connected to the top metal")


def load_tech(path=None) -> TechDB:
    """Load and validate a tech file.

    ``path=None`` falls back to ``$FINVERIFY_TECH``, then to the shipped
    FreePDK15 deck.
    """
    if path is None:
        path = os.environ.get("FINVERIFY_TECH") or DEFAULT_TECH
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TechError(f"{path}:{exc.lineno}:{exc.colno}: parse error: {exc.msg}") from None
    return parse_tech(doc)
