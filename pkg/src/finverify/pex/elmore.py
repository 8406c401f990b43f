"""Stage-by-stage Elmore delay over a (possibly annotated) netlist.

Transistors are switch-level resistors; wires are the RC trees formed by
the netlist's resistors.  A stage is the RC tree of one net driven by the
devices whose gates sat on the previous stage.  Rise (pull-up) and fall
(pull-down) delays are averaged.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field

from finverify.netex.netlist import GND, Netlist
from finverify.pex.annotate import node_net
from finverify.techdb import SwitchModel


class ElmoreError(ValueError):
    pass


@dataclass
class Stage:
    net: str
    drivers: tuple
    delay_s: float
    c_total_af: float


@dataclass
class ElmoreResult:
    source: str
    sink: str
    delay_s: float
    stages: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "sink": self.sink,
            "delay_s": self.delay_s,
            "stages": [{"net": s.net, "drivers": list(s.drivers), "delay_s": s.delay_s, "c_total_aF": s.c_total_af} for s in self.stages],
        }


class _Forest:
    """Resistor forest: adjacency, components, capacitance per node."""

    def __init__(self, nodes, resistors):
        self.adj = defaultdict(list)
        for a, b, r in resistors:
            self.adj[a].append((b, r))
            self.adj[b].append((a, r))
        self.comp = {}
        for n in sorted(set(nodes) | set(self.adj)):
            if n in self.comp:
                continue
            q = deque([n])
            self.comp[n] = n
            while q:
                u = q.popleft()
                for v, _ in self.adj[u]:
                    if v not in self.comp:
                        self.comp[v] = n
                        q.append(v)

    def members(self, root) -> list:
        return sorted(n for n, c in self.comp.items() if c == root)

    def check_tree(self, root) -> None:
        nodes = self.members(root)
        edges = sum(len(self.adj[n]) for n in nodes) // 2
        if edges <= len(nodes) - 1:
            return
        deg = {n: len(self.adj[n]) for n in nodes}
        leaves = deque(n for n in nodes if deg[n] <= 1)
        gone = set()
        while leaves:
            u = leaves.popleft()
            gone.add(u)
            for v, _ in self.adj[u]:
                if v not in gone:
                    deg[v] -= 1
                    if deg[v] == 1:
                        leaves.append(v)
        loop = sorted(n for n in nodes if n not in gone)
        raise ElmoreError(f"resistor network is not a tree; cycle through {', '.join(loop)}")

    def delay(self, root: str, target: str, cap: dict) -> float:
        """Sum over the root->target path of R_e times the capacitance downstream of e."""
        parent, order = {root: (None, 0.0)}, [root]
        for u in order:
            for v, r in self.adj[u]:
                if v not in parent:
                    parent[v] = (u, r)
                    order.append(v)
        down = {n: cap.get(n, 0.0) for n in order}
        for n in reversed(order[1:]):
            down[parent[n][0]] += down[n]
        t, n = 0.0, target
        while n != root:
            p, r = parent[n]
            t += r * down[n]
            n = p
        return t


def _r_on(dev, sw: SwitchModel) -> float:
    return sw.r_on_ohm_per_fin[dev.kind] * (dev.L / sw.reference_length_nm) / dev.n_fin


def elmore_summary(
    nl: Netlist,
    source: str,
    sink: str,
    switch: SwitchModel | None = None,
    junction: bool = True,
    parasitics: bool = True,
) -> ElmoreResult:
    """Elmore delay from ``source`` to ``sink`` in seconds.

    ``parasitics=False`` ignores annotated elements (each net is one node);
    ``junction`` adds drain/source junction capacitance from the device
    geometry.
    """
    use_el = parasitics and bool(nl.elements)
    terms = dict(nl.terminal_nodes) if use_el else {}
    pins = dict(nl.pin_nodes) if use_el else {}

    def tnode(d, role):
        return terms.get((d.id, role), d.terminals()[role])

    res = [(e.a, e.b, e.value) for e in nl.elements if e.kind == "R"] if use_el else []
    nodes = set(nl.nets) | {tnode(d, r) for d in nl.devices for r in "dgsb"}
    nodes |= set(pins.values()) | {n for a, b, _ in res for n in (a, b)}
    nodes.discard(GND)
    if any(GND in (a, b) for a, b, _ in res):
        raise ElmoreError("resistor to ground is not supported")
    forest = _Forest(nodes, res)

    cap = defaultdict(float)
    if use_el:
        for e in nl.elements:
            if e.kind == "C":
                for n in (e.a, e.b):
                    if n != GND:
                        cap[n] += e.value
    if nl.devices:
        if switch is None:
            raise ElmoreError("a switch model is needed for netlists with devices")
        for d in nl.devices:
            cap[tnode(d, "g")] += switch.c_gate_af_per_fin * d.n_fin
            if junction:
                cap[tnode(d, "d")] += switch.cj_af_per_nm2 * float(d.n_fin * d.w_fin * d.l_fin_d) + switch.cjsw_af_per_nm * float(2 * d.l_fin_d * d.n_fin + d.w_fin * d.n_fin)
                cap[tnode(d, "s")] += switch.cj_af_per_nm2 * float(d.n_fin * d.w_fin * d.l_fin_s) + switch.cjsw_af_per_nm * float(2 * d.l_fin_s * d.n_fin + d.w_fin * d.n_fin)

    def resolve(name):
        if name in pins:
            return pins[name]
        if name in forest.comp:
            return name
        raise ElmoreError(f"unknown source/sink {name!r}")

    src, dst = resolve(source), resolve(sink)
    supply = {d.bulk for d in nl.devices}
    total, stages = 0.0, []
    comp, drivers, visited = forest.comp[src], (), set()
    while True:
        if comp in visited:
            raise ElmoreError(f"no path from {source} to {sink}")
        visited.add(comp)
        forest.check_tree(comp)
        members = set(forest.members(comp))
        ctot = sum(cap.get(n, 0.0) for n in members)
        loads = [d for d in nl.devices if tnode(d, "g") in members]
        if dst in members:
            targets = [dst]
        else:
            targets = sorted({tnode(d, "g") for d in loads})
            if not targets:
                raise ElmoreError(f"no path from {source} to {sink}")
        net = node_net(next(iter(sorted(members))))
        if not drivers:
            t = max(forest.delay(src, x, cap) for x in targets)
        else:
            per = []
            for kind in ("PFIN", "NFIN"):
                ds = [d for d in drivers if d.kind == kind]
                if not ds:
                    continue
                g = sum(1.0 / _r_on(d, switch) for d in ds)
                root = min(n for d in ds for n in (tnode(d, "d"), tnode(d, "s")) if n in members)
                per.append(ctot / g + max(forest.delay(root, x, cap) for x in targets))
            t = sum(per) / len(per)
        t *= 1e-18  # ohm * aF
        total += t
        stages.append(Stage(net, tuple(d.id for d in drivers), t, ctot))
        if dst in members:
            return ElmoreResult(source, sink, total, stages)

        # the next stage is the non-supply output the loads switch
        out = defaultdict(set)
        for d in loads:
            for role in "ds":
                n = tnode(d, role)
                if node_net(n) in supply or forest.comp[n] == comp:
                    continue
                out[forest.comp[n]].add(d.kind)
        if not out:
            raise ElmoreError(f"no path from {source} to {sink}")
        comp = sorted(out, key=lambda c: (len(out[c]) < 2, c))[0]
        cm = set(forest.members(comp))
        drivers = tuple(d for d in loads if tnode(d, "d") in cm or tnode(d, "s") in cm)
