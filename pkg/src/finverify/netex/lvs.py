"""Layout-versus-schematic comparison by joint colour refinement.

Both netlists become bipartite device/net graphs.  Colours are refined
jointly (so equivalent vertices on either side get the same colour) until
stable; ambiguous classes are resolved by trying every pairing for the
lowest-id vertex, with backtracking.  A final check verifies the bijection
edge by edge, treating source and drain as interchangeable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from finverify.netex.netlist import Netlist

MATCH, MISMATCH = "MATCH", "MISMATCH"
ROLE = {"d": "sd", "s": "sd", "g": "g", "b": "b"}


@dataclass
class LvsResult:
    verdict: str
    diagnostics: list = field(default_factory=list)
    device_map: dict = field(default_factory=dict)
    net_map: dict = field(default_factory=dict)

    @property
    def match(self) -> bool:
        return self.verdict == MATCH

    def to_json(self) -> str:
        return json.dumps({"verdict": self.verdict, "diagnostics": self.diagnostics}, indent=1, sort_keys=True) + "\n"


class _Graph:
    def __init__(self, nl: Netlist):
        used = {}
        for d in nl.devices:
            for r, n in d.terminals().items():
                used.setdefault(n, []).append((d.id, ROLE[r]))
        ports = set(nl.ports)
        self.nets = sorted(n for n in set(used) | ports)  # floating unlabeled nets dropped
        self.devs = sorted(d.id for d in nl.devices)
        self.dev = {d.id: d for d in nl.devices}
        self.ports = ports
        self.net_adj = {n: [(did, role) for did, role in used.get(n, [])] for n in self.nets}
        self.dev_adj = {d.id: [(ROLE[r], n) for r, n in d.terminals().items()] for d in nl.devices}


def _refine(ga: _Graph, gb: _Graph, dc: list, nc: list) -> tuple:
    """Refine device/net colours of both graphs jointly until stable.

    ``dc``/``nc`` are ``[dict_a, dict_b]`` colour maps; returns new maps.
    """
    graphs = (ga, gb)
    while True:
        n_classes = len(set(dc[0].values()) | set(dc[1].values())) + len(set(nc[0].values()) | set(nc[1].values()))
        sig_d = [{d: (dc[s][d], tuple(sorted((r, nc[s][n]) for r, n in g.dev_adj[d]))) for d in g.devs} for s, g in enumerate(graphs)]
        sig_n = [{n: (nc[s][n], tuple(sorted((r, dc[s][d]) for d, r in g.net_adj[n]))) for n in g.nets} for s, g in enumerate(graphs)]
        # canonical relabelling shared by both sides
        dmap = {v: k for k, v in enumerate(sorted(set(sig_d[0].values()) | set(sig_d[1].values()), key=repr))}
        nmap = {v: k for k, v in enumerate(sorted(set(sig_n[0].values()) | set(sig_n[1].values()), key=repr))}
        dc = [{d: dmap[s] for d, s in sig_d[i].items()} for i in range(2)]
        nc = [{n: nmap[s] for n, s in sig_n[i].items()} for i in range(2)]
        new = len(dmap) + len(nmap)
        if new == n_classes:
            return dc, nc


def _classes(col: dict) -> dict:
    out = {}
    for k, c in col.items():
        out.setdefault(c, []).append(k)
    return out


def _balanced(dc, nc) -> tuple | None:
    """First colour class whose sizes differ between the sides, or None."""
    for what, cols in (("device", dc), ("net", nc)):
        a, b = _classes(cols[0]), _classes(cols[1])
        for c in sorted(set(a) | set(b)):
            if len(a.get(c, ())) != len(b.get(c, ())):
                return what, sorted(a.get(c, []), key=str), sorted(b.get(c, []), key=str)
    return None


def _verify(ga: _Graph, gb: _Graph, dmap: dict, nmap: dict) -> bool:
    for d in ga.devs:
        x, y = ga.dev[d], gb.dev[dmap[d]]
        if (x.kind, x.n_fin, x.L) != (y.kind, y.n_fin, y.L):
            return False
        if nmap[x.gate] != y.gate or nmap[x.bulk] != y.bulk:
            return False
        if sorted((nmap[x.source], nmap[x.drain])) != sorted((y.source, y.drain)):
            return False
    return True


def _search(ga, gb, dc, nc, depth=0):
    dc, nc = _refine(ga, gb, dc, nc)
    bad = _balanced(dc, nc)
    if bad is not None:
        return None, bad
    # pick the smallest ambiguous class, lowest id in A
    best = None
    for what, cols in (("device", dc), ("net", nc)):
        a, b = _classes(cols[0]), _classes(cols[1])
        for c, members in a.items():
            if len(members) > 1 and (best is None or len(members) < best[0]):
                best = (len(members), what, c, sorted(members, key=str)[0], sorted(b[c], key=str))
    if best is None:
        dmap = {d: next(e for e, c in dc[1].items() if c == dc[0][d]) for d in ga.devs}
        nmap = {n: next(m for m, c in nc[1].items() if c == nc[0][n]) for n in ga.nets}
        return ((dmap, nmap) if _verify(ga, gb, dmap, nmap) else None), ("verify", [], [])
    _, what, c, va, candidates = best
    fresh = max(max(dc[0].values(), default=0), max(nc[0].values(), default=0)) + 1
    last = None
    for vb in candidates:
        if what == "device":
            ndc = [dict(dc[0]), dict(dc[1])]
            ndc[0][va] = ndc[1][vb] = -fresh
            res, last = _search(ga, gb, ndc, nc, depth + 1)
        else:
            nnc = [dict(nc[0]), dict(nc[1])]
            nnc[0][va] = nnc[1][vb] = -fresh
            res, last = _search(ga, gb, dc, nnc, depth + 1)
        if res is not None:
            return res, None
    return None, last


def lvs_compare(extracted: Netlist, reference: Netlist) -> LvsResult:
    diags = []
    ga, gb = _Graph(extracted), _Graph(reference)
    if len(ga.devs) != len(gb.devs):
        diags.append(f"device count {len(ga.devs)} vs {len(gb.devs)}")
    if len(ga.nets) != len(gb.nets):
        diags.append(f"net count {len(ga.nets)} vs {len(gb.nets)}")
    if ga.ports != gb.ports:
        only_a, only_b = sorted(ga.ports - gb.ports), sorted(gb.ports - ga.ports)
        diags.append(f"port sets differ: layout-only {only_a}, schematic-only {only_b}")
    if diags:
        return LvsResult(MISMATCH, diags)

    def dev_seed(g, d):
        x = g.dev[d]
        return ("dev", x.kind, x.n_fin, x.L)

    def net_seed(g, n):
        return ("port", n) if n in ga.ports and n in gb.ports else ("net",)

    seeds_d = sorted({dev_seed(g, d) for g in (ga, gb) for d in g.devs}, key=repr)
    seeds_n = sorted({net_seed(g, n) for g in (ga, gb) for n in g.nets}, key=repr)
    sd = {s: k for k, s in enumerate(seeds_d)}
    sn = {s: k for k, s in enumerate(seeds_n)}
    dc = [{d: sd[dev_seed(g, d)] for d in g.devs} for g in (ga, gb)]
    nc = [{n: sn[net_seed(g, n)] for n in g.nets} for g in (ga, gb)]
    res, bad = _search(ga, gb, dc, nc)
    if res is None:
        what, a, b = bad if bad else ("verify", [], [])
        if what == "verify":
            return LvsResult(MISMATCH, ["no consistent device/net bijection"])
        return LvsResult(MISMATCH, [f"{what} class does not pair: layout {a} vs schematic {b}"])
    dmap, nmap = res
    return LvsResult(MATCH, [], dmap, nmap)
