"""Netlist data model and the SPICE-like text format.

Device card::

    X<id> <d> <g> <s> <b> <NFIN|PFIN> nfin=<n> l=<L>n adej=<a> asej=<a> pdej=<p> psej=<p>

Areas are written in m² (``e-18`` scaled nm²) and lengths with the ``n``
suffix.  Parasitic cards are ``C<k> <a> <b> <value>a`` and
``R<k> <a> <b> <value>``; ground is node ``0``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from fractions import Fraction

from finverify._io import atomic_write_text
from finverify.geometry import Rect

MODELS = {"NFIN": "NFIN", "PFIN": "PFIN", "NFET": "NFIN", "PFET": "PFIN", "NMOS": "NFIN", "PMOS": "PFIN"}
GND = "0"
SI = {"f": 1e-15, "p": 1e-12, "n": 1e-9, "u": 1e-6, "m": 1e-3, "k": 1e3, "meg": 1e6, "g": 1e9, "t": 1e12, "a": 1e-18}


class NetlistError(ValueError):
    pass


@dataclass(frozen=True)
class DeviceGeometry:
    adej: object
    asej: object
    pdej: object
    psej: object


@dataclass(frozen=True)
class FinDevice:
    id: int
    kind: str
    drain: str
    gate: str
    source: str
    bulk: str
    n_fin: int
    L: int
    w_fin: int = 0
    l_fin_d: object = 0
    l_fin_s: object = 0
    location: Rect | None = None

    def terminals(self) -> dict:
        return {"d": self.drain, "g": self.gate, "s": self.source, "b": self.bulk}


@dataclass(frozen=True)
class ParasiticElement:
    kind: str  # "C" or "R"
    a: str
    b: str
    value: float  # aF or ohm
    origin: str

    def key(self) -> tuple:
        a, b = sorted((self.a, self.b))
        return (self.kind, a, b, self.origin)


@dataclass(frozen=True)
class Netlist:
    name: str
    ports: tuple
    devices: tuple
    nets: tuple
    elements: tuple = ()
    terminal_nodes: tuple = ()  # ((device_id, role), node) when annotated
    pin_nodes: tuple = ()  # (net, node) when annotated
    extra: dict = field(default_factory=dict, compare=False)

    def device(self, dev_id: int) -> FinDevice:
        for d in self.devices:
            if d.id == dev_id:
                return d
        raise KeyError(dev_id)

    def with_elements(self, elements, terminal_nodes=(), pin_nodes=()) -> "Netlist":
        return replace(self, elements=tuple(elements), terminal_nodes=tuple(terminal_nodes), pin_nodes=tuple(pin_nodes))


# ---------------------------------------------------------------------------
# device geometry


def drawn_width(n_fin: int, w_fin: int, pitch: int) -> int:
    """Drawn active width of an ``n_fin`` device: ``W_fin + (n_fin - 1) * pitch``."""
    if n_fin < 1:
        raise ValueError("n_fin must be >= 1")
    return w_fin + (n_fin - 1) * pitch


def n_fin_from_width(width: int, w_fin: int, pitch: int) -> int:
    """Inverse of :func:`drawn_width`; raises when ``width`` is not on the fin grid."""
    k, r = divmod(width - w_fin, pitch)
    if width < w_fin or r:
        raise ValueError(f"drawn width {width} nm is not W_fin + (n_fin - 1)*Pitch_fin for W_fin={w_fin}, Pitch_fin={pitch}")
    return k + 1


def device_geometry(dev: FinDevice) -> DeviceGeometry:
    """Junction areas and perimeters of a multi-fin device (per-fin sums)."""
    n, w = dev.n_fin, dev.w_fin
    return DeviceGeometry(
        adej=n * w * dev.l_fin_d,
        asej=n * w * dev.l_fin_s,
        pdej=2 * dev.l_fin_d * n + w * n,
        psej=2 * dev.l_fin_s * n + w * n,
    )


def planar_geometry(W, L_DS) -> DeviceGeometry:
    """Planar reference: ``A = W*L`` and ``P = 2L + W`` for both junctions."""
    if W <= 0 or L_DS <= 0:
        raise ValueError("W and L_DS must be positive")
    a, p = W * L_DS, 2 * L_DS + W
    return DeviceGeometry(a, a, p, p)


# ---------------------------------------------------------------------------
# writing


def _num(v) -> str:
    if isinstance(v, Fraction):
        v = float(v)
    if isinstance(v, float) and v.is_integer():
        v = int(v)
    return f"{v:.10g}" if isinstance(v, float) else str(v)


def device_card(d: FinDevice, nodes=None) -> str:
    g = device_geometry(d)
    t = d.terminals()
    if nodes:
        t = {r: nodes.get((d.id, r), n) for r, n in t.items()}
    return (
        f"X{d.id} {t['d']} {t['g']} {t['s']} {t['b']} {d.kind} nfin={d.n_fin} l={_num(d.L)}n "
        f"adej={_num(g.adej)}e-18 asej={_num(g.asej)}e-18 pdej={_num(g.pdej)}n psej={_num(g.psej)}n"
    )


def netlist_text(nl: Netlist) -> str:
    lines = [f"* finverify netlist: {nl.name}", "* nets: " + " ".join(sorted(nl.nets))]
    lines.append(f".subckt {nl.name} " + " ".join(sorted(nl.ports)) if nl.ports else f".subckt {nl.name}")
    nodes = dict(nl.terminal_nodes)
    for d in sorted(nl.devices, key=lambda d: d.id):
        lines.append(device_card(d, nodes))
    for net, node in sorted(nl.pin_nodes):
        lines.append(f"* pin {net} {node}")
    caps = sorted((e for e in nl.elements if e.kind == "C"), key=ParasiticElement.key)
    ress = sorted((e for e in nl.elements if e.kind == "R"), key=ParasiticElement.key)
    for k, e in enumerate(caps, start=1):
        a, b = sorted((e.a, e.b), key=lambda n: (n == GND, n))
        lines.append(f"C{k} {a} {b} {e.value:.9g}a * {e.origin}")
    for k, e in enumerate(ress, start=1):
        a, b = sorted((e.a, e.b))
        lines.append(f"R{k} {a} {b} {e.value:.9g} * {e.origin}")
    lines.append(".ends")
    return "\n".join(lines) + "\n"


def write_netlist(nl: Netlist, path) -> None:
    atomic_write_text(path, netlist_text(nl))


# ---------------------------------------------------------------------------
# reading

_NUM = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:e[+-]?\d+)?)(meg|[afpnumkgt])?[a-z]*$", re.I)


def parse_value(tok: str) -> float:
    """SPICE number with an optional scale suffix (``16n``, ``1.5e-18``, ``3meg``)."""
    m = _NUM.match(tok.strip())
    if not m:
        raise NetlistError(f"bad number {tok!r}")
    v = float(m.group(1))
    if m.group(2):
        v *= SI[m.group(2).lower()]
    return v


def _strip_comment(line: str) -> str:
    for mark in ("$", ";"):
        line = line.split(mark, 1)[0]
    # inline comment after a card
    if " * " in line:
        line = line.split(" * ", 1)[0]
    return line.strip()


def parse_netlist(text: str, name_hint: str = "") -> Netlist:
    raw = text.splitlines()
    logical, pin_nodes, term_nodes = [], [], []
    for no, line in enumerate(raw, start=1):
        s = line.strip()
        if s.startswith("* pin "):
            tok = s.split()
            if len(tok) == 4:
                pin_nodes.append((tok[2], tok[3]))
            continue
        if not s or s.startswith("*"):
            continue
        if s.startswith("+"):
            if not logical:
                raise NetlistError(f"line {no}: continuation without a card")
            logical[-1] = (logical[-1][0], logical[-1][1] + " " + s[1:])
            continue
        logical.append((no, s))

    name, ports, devices, elements, nets = name_hint, (), [], [], set()
    in_sub = False
    for no, s in logical:
        s = _strip_comment(s)
        if not s:
            continue
        tok = s.split()
        head = tok[0].lower()
        if head == ".subckt":
            if in_sub:
                raise NetlistError(f"line {no}: nested .subckt")
            if len(tok) < 2:
                raise NetlistError(f"line {no}: .subckt needs a name")
            name, ports, in_sub = tok[1], tuple(tok[2:]), True
            nets.update(ports)
        elif head == ".ends":
            in_sub = False
        elif head.startswith("."):
            continue
        elif head[0] == "x":
            if len(tok) < 6:
                raise NetlistError(f"line {no}: device card needs 4 nodes and a model")
            d, g, src, b, model = tok[1:6]
            kind = MODELS.get(model.upper())
            if kind is None:
                raise NetlistError(f"line {no}: unknown device model {model!r}")
            params = {}
            for p in tok[6:]:
                if "=" not in p:
                    raise NetlistError(f"line {no}: malformed parameter {p!r}")
                k, v = p.split("=", 1)
                try:
                    params[k.lower()] = parse_value(v)
                except NetlistError as exc:
                    raise NetlistError(f"line {no}: {exc}") from None
            if "nfin" not in params or "l" not in params:
                raise NetlistError(f"line {no}: device needs nfin= and l=")
            try:
                dev_id = int(tok[0][1:])
            except ValueError:
                dev_id = len(devices) + 1
            n_fin = params["nfin"]
            if n_fin != int(n_fin) or n_fin < 1:
                raise NetlistError(f"line {no}: nfin must be a positive integer")
            L = round(params["l"] * 1e9, 6)
            # annotated cards name parasitic nodes ``net:seg<k>``
            ends = {}
            for role, node in zip("dgsb", (d, g, src, b)):
                net = node.rpartition(":seg")[0]
                if net:
                    term_nodes.append(((dev_id, role), node))
                ends[role] = net or node
            devices.append(
                FinDevice(dev_id, kind, ends["d"], ends["g"], ends["s"], ends["b"], int(n_fin), int(L) if float(L).is_integer() else L)
            )
            nets.update(ends.values())
        elif head[0] in "cr":
            if len(tok) < 4:
                raise NetlistError(f"line {no}: {tok[0]} card needs two nodes and a value")
            try:
                v = parse_value(tok[3])
            except NetlistError as exc:
                raise NetlistError(f"line {no}: {exc}") from None
            if head[0] == "c":
                elements.append(ParasiticElement("C", tok[1], tok[2], v / 1e-18, "PARSED"))
            else:
                elements.append(ParasiticElement("R", tok[1], tok[2], v, "PARSED"))
        else:
            raise NetlistError(f"line {no}: unsupported card {tok[0]!r}")
    if in_sub:
        raise NetlistError("missing .ends")
    nets.discard(GND)
    return Netlist(name, ports, tuple(devices), tuple(sorted(nets)), tuple(elements), tuple(sorted(term_nodes)), tuple(sorted(pin_nodes)))


def read_netlist(path) -> Netlist:
    from pathlib import Path

    p = Path(path)
    return parse_netlist(p.read_text(encoding="utf-8"), p.stem)
