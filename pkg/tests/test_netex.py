import dataclasses
import random
import re
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finverify.layoutio import Pin, flat_from_rects
from finverify.geometry import Point, ShapeSet, overlap_area
from finverify.netex import (
    ExtractionError,
    LabelConflictError,
    LabelConflictWarning,
    FinDevice,
    Netlist,
    NetlistError,
    device_geometry,
    drawn_width,
    effective_gate,
    extract,
    extract_connectivity,
    lvs_compare,
    n_fin_from_width,
    netlist_text,
    parse_netlist,
    planar_geometry,
    read_netlist,
    write_netlist,
)

from conftest import FIX, _tech, flat
from oracles import fin_sum_geometry


def lay(tech, pins=(), **layers):
    return flat_from_rects(tech, {k: np.array(v, dtype=np.int64).reshape(-1, 4) for k, v in layers.items()}, pins)


def dev(n_fin=3, w_fin=8, l_d=30, l_s=30):
    return FinDevice(1, "NFIN", "d", "g", "s", "b", n_fin, 16, w_fin, l_d, l_s)


def partition_of(layout, tech, probes):
    """Net id for each probe point, canonicalized to first-seen order."""
    view, nets, shape_net, _ = extract_connectivity(layout, tech)
    ids = []
    for x, y in probes:
        hit = [shape_net[r] for net in nets for r in net.members if view[r.layer].polygons[r.index].contains_point(Point(x, y))]
        ids.append(hit[0])
    first = {}
    return [first.setdefault(i, len(first)) for i in ids]


# ---------------------------------------------------------------------------
# device geometry


def test_fin_geometry_example():
    g = device_geometry(dev())
    assert (g.adej, g.pdej) == (720, 204)
    assert (g.asej, g.psej) == (720, 204)


def test_single_fin_is_planar_with_w_fin():
    g = device_geometry(dev(n_fin=1, l_d=30, l_s=30))
    p = planar_geometry(8, 30)
    assert (g.adej, g.pdej) == (p.adej, p.pdej) == (240, 68)


def test_planar_examples():
    p = planar_geometry(100, 50)
    assert (p.adej, p.pdej) == (5000, 200)
    assert planar_geometry(37, 37).pdej == 3 * 37
    with pytest.raises(ValueError):
        planar_geometry(0, 5)


@given(st.integers(1, 64), st.integers(1, 39), st.integers(1, 500), st.integers(1, 500))
@settings(max_examples=200)
def test_fin_geometry_matches_per_fin_sum(n, w, ld, ls):
    g = device_geometry(dev(n, w, ld, ls))
    assert (g.adej, g.pdej) == fin_sum_geometry(n, w, ld)
    assert (g.asej, g.psej) == fin_sum_geometry(n, w, ls)


@given(st.integers(1, 500), st.integers(1, 500))
def test_planar_matches_recompute(W, L):
    p = planar_geometry(W, L)
    assert p.adej == p.asej == W * L and p.pdej == p.psej == L + L + W


@given(st.integers(2, 64), st.integers(1, 60), st.integers(1, 200))
def test_fins_shrink_junction_area(n, w_fin, L):
    pitch = 40
    if w_fin >= pitch:
        return
    W = drawn_width(n, w_fin, pitch)
    assert device_geometry(dev(n, w_fin, L, L)).adej < planar_geometry(W, L).adej


def test_n_fin_from_width():
    assert n_fin_from_width(88, 8, 40) == 3
    assert n_fin_from_width(8, 8, 40) == 1
    for bad in (60, 7, 0):
        with pytest.raises(ValueError, match="W_fin"):
            n_fin_from_width(bad, 8, 40)
    for n in range(1, 65):
        assert n_fin_from_width(drawn_width(n, 8, 40), 8, 40) == n


# ---------------------------------------------------------------------------
# gate cut


def test_gate_cut_splits_gate(tech):
    l = lay(tech, GATEA=[(100, 0, 116, 800)], GATEC=[(90, 390, 126, 410)])
    assert [tuple(p.bbox) for p in effective_gate(l, tech).polygons] == [(100, 0, 116, 390), (100, 410, 116, 800)]


def test_no_cut_is_identity_and_full_cut_empties(tech):
    g = effective_gate(lay(tech, GATEA=[(100, 0, 116, 800)], GATEB=[(116, 0, 132, 400)]), tech)
    assert len(g) == 1 and g.area == 16 * 800 + 16 * 400
    assert not effective_gate(lay(tech, GATEA=[(100, 0, 116, 800)], GATEC=[(90, -10, 130, 810)]), tech)


gate_box = st.tuples(st.integers(0, 300), st.integers(0, 300), st.integers(5, 60), st.integers(5, 300)).map(
    lambda t: (t[0], t[1], t[0] + t[2], t[1] + t[3])
)


@given(st.lists(gate_box, min_size=1, max_size=6), st.lists(gate_box, max_size=3), gate_box)
@settings(max_examples=60, deadline=None)
def test_adding_a_cut_never_merges_gates(gates, cuts, extra):
    tech = _tech()
    before = effective_gate(lay(tech, GATEA=gates, GATEC=cuts), tech)
    after = effective_gate(lay(tech, GATEA=gates, GATEC=cuts + [extra]), tech)
    for p in after.polygons:
        assert sum(overlap_area(p, q) > 0 for q in before.polygons) == 1
    if all(overlap_area(q, ShapeSet.from_rects("c", [extra])) < q.area for q in before.polygons):
        assert len(after) >= len(before)


# ---------------------------------------------------------------------------
# connectivity


def test_via_stack_is_one_net(tech):
    l = lay(tech, MINT3A=[(0, 0, 300, 28)], VINT3=[(200, 7, 214, 21)], MINT4B=[(193, 0, 221, 300)])
    _, nets, _, _ = extract_connectivity(l, tech)
    assert len(nets) == 1 and {r.layer for r in nets[0].members} == {"MINT3A", "VINT3", "MINT4B"}


def test_disjoint_rects_are_two_nets(tech):
    _, nets, _, _ = extract_connectivity(lay(tech, M1A=[(0, 0, 28, 100), (100, 0, 128, 100)]), tech)
    assert len(nets) == 2


def test_via_must_overlap_both_layers(tech):
    l = lay(tech, MINT3A=[(0, 0, 300, 28)], VINT3=[(400, 7, 414, 21)], MINT4B=[(393, 0, 421, 300)])
    _, nets, _, _ = extract_connectivity(l, tech)
    assert len(nets) == 2


def test_stitched_inverter_matches_plain(tech):
    a = extract(flat("inv.json", "INV"), tech).netlist()
    b = extract(flat("inv_stitched.json", "INV"), tech).netlist()
    assert lvs_compare(a, b).match
    assert [d.terminals() for d in a.devices] == [d.terminals() for d in b.devices]


wire = st.tuples(st.integers(0, 400), st.integers(0, 400), st.integers(28, 120), st.integers(28, 120)).map(
    lambda t: (t[0], t[1], t[0] + t[2], t[1] + t[3])
)


@given(st.lists(wire, min_size=1, max_size=8), st.data())
@settings(max_examples=50, deadline=None)
def test_color_stitch_keeps_partition(wires, data):
    tech = _tech()
    k = data.draw(st.integers(0, len(wires) - 1))
    x0, y0, x1, y1 = wires[k]
    cut = data.draw(st.integers(x0 + 1, x1 - 1))
    ov = data.draw(st.integers(0, min(cut - x0, x1 - cut) - 1))
    rest = wires[:k] + wires[k + 1 :]
    probes = [((r[0] + r[2]) // 2, (r[1] + r[3]) // 2) for r in wires]
    plain = partition_of(lay(tech, M1A=wires), tech, probes)
    stitched_layout = lay(tech, M1A=rest + [(x0, y0, cut + ov, y1)], M1B=[(cut - ov, y0, x1, y1)])
    got = partition_of(stitched_layout, tech, probes)
    _, nets_a, _, _ = extract_connectivity(lay(tech, M1A=wires), tech)
    _, nets_b, _, _ = extract_connectivity(stitched_layout, tech)
    assert got == plain
    assert len(nets_a) == len(nets_b)


@pytest.mark.parametrize("name, top", [("nand4.json", "NAND4"), ("chain9.json", "CHAIN9")])
def test_partition_ignores_shape_order(tech, name, top):
    base = flat(name, top)
    ref = extract(base, tech).netlist()
    rng = random.Random(11)
    for _ in range(3):
        shuffled = {}
        for k, s in base.layers.items():
            r = s.rects.tolist()
            rng.shuffle(r)
            shuffled[k] = np.array(r, dtype=np.int64)
        again = extract(flat_from_rects(tech, shuffled, base.pins, base.name), tech).netlist()
        assert netlist_text(again) == netlist_text(ref)


# ---------------------------------------------------------------------------
# devices


def test_inverter_devices(tech):
    ex = extract(flat("inv.json", "INV"), tech)
    kinds = sorted((d.kind, d.gate, d.drain, d.source, d.bulk, d.n_fin, d.L) for d in ex.devices)
    assert kinds == [("NFIN", "A", "ZN", "VSS", "VSS", 3, 16), ("PFIN", "A", "ZN", "VDD", "VDD", 3, 16)]
    dummies = [c for c in ex.channels if c[0] is None]
    assert dummies and len(ex.channels) == len(ex.devices) + len(dummies)


def test_series_stack_splits_shared_diffusion(tech):
    ex = extract(flat("nand4.json", "NAND4"), tech)
    nf = sorted((d for d in ex.devices if d.kind == "NFIN"), key=lambda d: d.location.x0)
    assert len(nf) == 4
    # inner diffusions are shared between two gates and split at the midpoint
    assert nf[0].l_fin_s == 2 * nf[0].l_fin_d
    assert all(d.l_fin_s == d.l_fin_d for d in nf[1:3])


def test_off_grid_active_is_an_extraction_error(tech):
    l = lay(tech, ACT=[(0, 0, 200, 60)], GATEA=[(92, -20, 108, 80)])
    with pytest.raises(ExtractionError, match="W_fin"):
        extract(l, tech)


def test_bad_gate_length_is_an_extraction_error(tech):
    l = lay(tech, ACT=[(0, 0, 200, 88)], GATEA=[(92, -20, 110, 108)])
    with pytest.raises(ExtractionError, match="gate length 18"):
        extract(l, tech)


def test_n_fin_from_drawn_active(tech):
    l = lay(tech, ACT=[(0, 0, 200, 88)], GATEA=[(92, -20, 108, 108)])
    (d,) = extract(l, tech).devices
    assert d.n_fin == 3 and d.L == 16 and d.kind == "NFIN"
    (p,) = extract(lay(tech, ACT=[(0, 0, 200, 88)], GATEA=[(92, -20, 108, 108)], NWELL=[(-50, -50, 250, 150)]), tech).devices
    assert p.kind == "PFIN"


def test_end_of_fin_gate_is_dummy(tech):
    l = lay(tech, ACT=[(0, 0, 200, 88)], GATEA=[(92, -20, 108, 108), (192, -20, 208, 108)])
    ex = extract(l, tech)
    assert len(ex.devices) == 1 and len(ex.channels) == 2


# ---------------------------------------------------------------------------
# netlist text


def test_netlist_text(tech, tmp_path):
    nl = extract(flat("inv.json", "INV"), tech).netlist()
    text = netlist_text(nl)
    cards = [l for l in text.splitlines() if l.startswith("X")]
    assert len(cards) == 2
    assert re.fullmatch(r"X1 ZN A VSS VSS NFIN nfin=3 l=16n adej=\S+ asej=\S+ pdej=\S+ psej=\S+", cards[0])
    assert set(nl.ports) == {"A", "VDD", "VSS", "ZN"}
    a, b = tmp_path / "a.sp", tmp_path / "b.sp"
    write_netlist(nl, a)
    write_netlist(extract(flat("inv.json", "INV"), tech).netlist(), b)
    assert a.read_bytes() == b.read_bytes()


def test_empty_netlist_is_header_only(tech):
    text = netlist_text(extract(lay(tech), tech).netlist())
    assert not any(l.startswith("X") for l in text.splitlines())
    assert text.splitlines()[-1] == ".ends"


def test_netlist_round_trip(tech):
    nl = extract(flat("nand4.json", "NAND4"), tech).netlist()
    back = parse_netlist(netlist_text(nl))
    assert lvs_compare(nl, back).match
    assert [(d.kind, d.n_fin, d.L) for d in back.devices] == [(d.kind, d.n_fin, d.L) for d in nl.devices]


@pytest.mark.parametrize(
    "text",
    [
        "X1 a b c NFIN nfin=3 l=16n\n",
        ".subckt T a\nX1 a a a a NFIN l=16n\n.ends\n",
        ".subckt T a\nX1 a a a a NFIN nfin=x l=16n\n.ends\n",
    ],
)
def test_malformed_reference_rejected(text):
    with pytest.raises(NetlistError):
        parse_netlist(text)


# ---------------------------------------------------------------------------
# LVS


@pytest.mark.parametrize(
    "layout, top, ref, verdict",
    [
        ("inv.json", "INV", "inv.sp", "MATCH"),
        ("nand4.json", "NAND4", "nand4.sp", "MATCH"),
        ("nand4.json", "NAND4", "nand3.sp", "MISMATCH"),
        ("inv4_gatebar.json", "INV4", "inv4.sp", "MATCH"),
        ("inv4_gatebar_nocut.json", "INV4", "inv4.sp", "MISMATCH"),
        ("inv_stitched.json", "INV", "inv.sp", "MATCH"),
    ],
)
def test_lvs_fixtures(tech, layout, top, ref, verdict):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LabelConflictWarning)
        nl = extract(flat(layout, top), tech).netlist()
    sch = read_netlist(FIX / ref)
    res = lvs_compare(nl, sch)
    assert res.verdict == verdict
    assert lvs_compare(sch, nl).verdict == verdict
    assert lvs_compare(nl, nl).match and lvs_compare(sch, sch).match


def test_nand3_mismatch_names_device_count(tech):
    res = lvs_compare(extract(flat("nand4.json", "NAND4"), tech).netlist(), read_netlist(FIX / "nand3.sp"))
    assert "device count 8 vs 6" in res.diagnostics


def test_lvs_ignores_card_order_and_source_drain_swap(tech):
    nl = extract(flat("nand4.json", "NAND4"), tech).netlist()
    devs = [dataclasses.replace(d, drain=d.source, source=d.drain) if d.id % 2 else d for d in nl.devices]
    random.Random(5).shuffle(devs)
    devs = [dataclasses.replace(d, id=k + 1) for k, d in enumerate(devs)]
    assert lvs_compare(nl, dataclasses.replace(nl, devices=tuple(devs))).match


def test_lvs_is_strict_on_gate_length_and_fins(tech):
    sch = read_netlist(FIX / "inv.sp")
    nl = extract(flat("inv.json", "INV"), tech).netlist()
    longer = dataclasses.replace(sch, devices=tuple(dataclasses.replace(d, L=20) for d in sch.devices))
    assert not lvs_compare(nl, longer).match
    fewer = dataclasses.replace(sch, devices=(dataclasses.replace(sch.devices[0], n_fin=2),) + sch.devices[1:])
    assert not lvs_compare(nl, fewer).match


def test_lvs_detects_swapped_gate(tech):
    sch = read_netlist(FIX / "nand4.sp")
    nl = extract(flat("nand4.json", "NAND4"), tech).netlist()
    d0 = nl.devices[0]
    wrong = dataclasses.replace(d0, gate="ZN")
    assert not lvs_compare(dataclasses.replace(nl, devices=(wrong,) + nl.devices[1:]), sch).match


def test_lvs_result_json(tech):
    res = lvs_compare(extract(flat("inv.json", "INV"), tech).netlist(), read_netlist(FIX / "inv.sp"))
    assert res.to_json() == '{\n "diagnostics": [],\n "verdict": "MATCH"\n}\n'


# ---------------------------------------------------------------------------
# labels


def shorted(tech):
    pins = (Pin("B", "M1A", Point(10, 10)), Pin("A", "M1A", Point(10, 90)))
    return lay(tech, pins=pins, M1A=[(0, 0, 28, 100)])


def test_label_conflict_warns_and_uses_smallest(tech):
    with pytest.warns(LabelConflictWarning, match="A, B"):
        _, nets, _, shorts = extract_connectivity(shorted(tech), tech)
    assert nets[0].name == "A" and shorts == [("A", "B")]


def test_label_conflict_strict(tech):
    with pytest.raises(LabelConflictError, match="A, B"):
        extract(shorted(tech), tech, strict=True)


def test_netlist_dataclass_defaults():
    nl = Netlist("T", (), (), ())
    assert nl.elements == () and nl.with_elements([]).elements == ()
