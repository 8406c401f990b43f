"""Back-annotation of extracted parasitics onto a device netlist."""

from __future__ import annotations

from finverify.netex.netlist import GND, Netlist
from finverify.pex.extract import PexError, PexResult


def node_net(node: str) -> str:
    """Net owning a parasitic node (``ZN:seg3`` -> ``ZN``)."""
    return node.rpartition(":seg")[0] or node


def annotate_netlist(nl: Netlist, pex: PexResult) -> Netlist:
    """Attach the elements of ``pex`` to ``nl``.

    Every element must reference nets of ``nl`` (or ground) and no two
    elements may share (kind, nodes, origin).
    """
    nets = set(nl.nets)
    seen = set()
    for e in pex.elements:
        for n in (e.a, e.b):
            if n != GND and node_net(n) not in nets:
                raise PexError(f"parasitic {e.kind} {e.a}-{e.b} references unknown net {node_net(n)!r}")
        if e.key() in seen:
            raise PexError(f"duplicate parasitic {e.kind} {e.a}-{e.b} ({e.origin})")
        seen.add(e.key())
    ids = {d.id for d in nl.devices}
    terms = [(k, n) for k, n in pex.terminal_nodes.items() if k[0] in ids]
    pins = [(net, n) for net, n in pex.pin_nodes.items() if net in nets]
    return nl.with_elements(pex.elements, sorted(terms), sorted(pins))
