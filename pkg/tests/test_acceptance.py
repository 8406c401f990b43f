"""Acceptance checks, one test per criterion.

Each test records a ``PASS criterion N: ...`` or ``FAIL criterion N: ...`` line
(echoed in the terminal summary) and then asserts on the same condition.
"""

import random
import time
import warnings
from collections import Counter

from finverify.drc import run_drc, violation_keys
from finverify.layoutio import load_layout
from finverify.netex import LabelConflictWarning, device_geometry, drawn_width, extract, lvs_compare, n_fin_from_width, read_netlist
from finverify.pex import ModelValidityWarning, annotate_netlist, elmore_summary, extract_parasitics, plate_vs_full
from finverify.cli import main

import oracles
import test_drc
import test_pex
from conftest import ACCEPTANCE_LINES, FIX, GOLDEN, flat
from test_netex import dev


def record(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_1_drc_fixtures(tech, mutations):
    run_drc(flat("inv.json", "INV"), tech)  # warm the JIT before timing
    golden_counts = {name: len(run_drc(flat(name, top), tech)) for name, top in GOLDEN.items()}
    exact, slowest = [], 0.0
    for m in mutations:
        t0 = time.perf_counter()
        layout = load_layout(FIX / "mutations" / m["file"], tech).flatten(m["top"])
        got = sorted({v.rule_id for v in run_drc(layout, tech)})
        slowest = max(slowest, time.perf_counter() - t0)
        exact.append(got == sorted(m["expected"]))
    for name, top in GOLDEN.items():
        t0 = time.perf_counter()
        run_drc(load_layout(FIX / name, tech).flatten(top), tech)
        slowest = max(slowest, time.perf_counter() - t0)
    ok = not any(golden_counts.values()) and len(mutations) >= 12 and all(exact) and slowest < 1.0
    record(
        1,
        ok,
        f"golden violations {sum(golden_counts.values())}, mutations exact {sum(exact)}/{len(mutations)}, "
        f"slowest fixture {slowest:.3f} s (< 1 s)",
    )


def test_criterion_2_drc_random_vs_oracle(tech):
    bad = []
    for seed in range(100):
        rects = test_drc.random_layout(seed)
        layout = test_drc.lay(tech, **{k: v for k, v in rects.items() if v})
        vs = run_drc(layout, tech)
        got = Counter((v.rule_id, tuple(v.location)) for v in vs)
        if got != test_drc.oracle(tech, rects) or violation_keys(vs) != set(got):
            bad.append(seed)
    record(2, not bad, f"100 random layouts, {100 - len(bad)} agree with the pixel oracle" + (f", seeds {bad}" if bad else ""))


def test_criterion_3_lvs(tech):
    cases = [
        ("inv.json", "INV", "inv.sp", "MATCH"),
        ("nand4.json", "NAND4", "nand4.sp", "MATCH"),
        ("inv4_gatebar.json", "INV4", "inv4.sp", "MATCH"),
        ("inv4_gatebar_nocut.json", "INV4", "inv4.sp", "MISMATCH"),
        ("inv_stitched.json", "INV", "inv.sp", "MATCH"),
    ]
    got = []
    for layout, top, ref, want in cases:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LabelConflictWarning)
            nl = extract(flat(layout, top), tech).netlist()
        got.append((layout, lvs_compare(nl, read_netlist(FIX / ref)).verdict, want))
    ok = all(v == w for _, v, w in got)
    record(3, ok, ", ".join(f"{name} {v}" for name, v, _ in got))


def test_criterion_4_fin_geometry():
    rng = random.Random(4)
    pairs = [(rng.randint(1, 39), rng.randint(1, 500)) for _ in range(20)]
    wrong = 0
    for n in range(1, 65):
        for w_fin, l_fin in pairs:
            g = device_geometry(dev(n, w_fin, l_fin, l_fin))
            want = oracles.fin_sum_geometry(n, w_fin, l_fin)
            wrong += (g.adej, g.pdej) != want or (g.asej, g.psej) != want
    trips = all(n_fin_from_width(drawn_width(n, 8, 40), 8, 40) == n for n in range(1, 65))
    record(4, wrong == 0 and trips, f"{64 * 20} (n_fin, W_fin, L_fin) cases, {wrong} mismatches; width round-trip {'ok' if trips else 'broken'}")


def test_criterion_5_plate_vs_full():
    big_p, big_f = plate_vs_full(100, 100, 0.1, 0.1, 4.1)
    small_p, small_f = plate_vs_full(1, 1, 0.1, 0.1, 4.1)
    big = abs(big_p - big_f) / big_f
    small = abs(small_p - small_f) / small_p
    record(
        5,
        big < 0.05 and small > 0.5,
        f"100x100 um plate differs {big:.2%} (< 5%), 1x1 um plate differs {small:.2%} of the plate term (> 50%)",
    )


def test_criterion_6_sakurai_extraction(tech):
    e, k = test_pex.m1(tech)
    t, h = e.thickness_nm / 1000, e.height_nm / 1000
    rng = random.Random(6)
    worst = 0.0
    for _ in range(20):
        w, s, length = rng.randrange(42, 300, 2), rng.randint(20, 600), rng.randint(500, 20000)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ModelValidityWarning)
            _, one = test_pex.pex(test_pex.lay(tech, M1A=[(0, 0, length, w)]), tech)
            _, two = test_pex.pex(test_pex.parallel(tech, w, w, s, length), tech)
        g = oracles.sakurai_ground(k, w / 1000, t, h, length / 1000)
        c = oracles.sakurai_coupling(k, w / 1000, t, h, s / 1000, length / 1000)
        got = [(x.value, g) for x in test_pex.caps(one)]
        got += [(x.value, g) for x in test_pex.caps(two, "FRINGE")]
        got += [(x.value, c) for x in test_pex.caps(two, "COUPLING")]
        if len(got) != 4:
            worst = float("inf")
            break
        worst = max([worst] + [abs(a - b) / b for a, b in got])
    record(6, worst < 1e-3, f"20 wire geometries, worst relative error {worst:.2e} (< 0.1%)")


def test_criterion_7_resistance(tech):
    rs = tech.sheet_resistance("M1A")
    worst = 0.0
    for w, length in [(28, 2800), (56, 56), (40, 1234), (100, 7000), (56, 3000)]:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ModelValidityWarning)
            _, res = test_pex.pex(test_pex.lay(tech, pins=test_pex.end_pins(0, length, w // 2), M1A=[(0, 0, length, w)]), tech)
        worst = max(worst, abs(test_pex.end_to_end(res) - rs * length / w) / (rs * length / w))

    w, length = 56, 3000
    split = test_pex.lay(
        tech,
        pins=test_pex.end_pins(0, length, w // 2),
        M1A=[(0, 0, length, w)] + [(x, w, x + 60, w + 80) for x in (300, 1100, 2400)],
    )
    seg = abs(test_pex.end_to_end(test_pex.pex(split, tech)[1]) - rs * length / w) / (rs * length / w)

    from finverify.geometry import Point
    from finverify.layoutio import Pin

    pins = (Pin("P", "M1A", Point(0, 28)), Pin("Q", "MINT1A", Point(1000, 2000)))
    layout = test_pex.lay(tech, pins=pins, M1A=[(0, 0, 1020, w)], V1=[(993, 21, 1007, 35)], MINT1A=[(972, 0, 1028, 2000)])
    via_want = rs * 1000 / w + tech.layer("V1").electrical.via_resistance_ohm + rs * 1972 / w
    via = abs(test_pex.end_to_end(test_pex.pex(layout, tech)[1]) - via_want) / via_want
    ok = worst < 1e-9 and seg < 1e-9 and via < 1e-9
    record(7, ok, f"uniform wires {worst:.1e}, segmented {seg:.1e}, via series {via:.1e} relative error (< 1e-9)")


def test_criterion_8_elmore_ordering(tech):
    ex = extract(flat("chain9.json", "CHAIN9"), tech)
    nl, sw = ex.netlist(), tech.switch_model
    none = elmore_summary(nl, "IN", "OUT", sw, junction=False).delay_s
    geo = elmore_summary(nl, "IN", "OUT", sw, junction=True).delay_s
    full = elmore_summary(annotate_netlist(nl, extract_parasitics(ex, tech)), "IN", "OUT", sw).delay_s
    record(8, 0 < none < geo < full, f"chain9 delay none {none * 1e12:.3f} ps < geometry {geo * 1e12:.3f} ps < full {full * 1e12:.3f} ps")


def _outputs(tmp, workers):
    w = ["--workers", str(workers)]
    runs = {
        "drc": ["drc", "--layout", str(FIX / "nand4_tiled.json"), "--report", "drc.json", "--svg", "drc.svg"],
        "drc_bad": ["drc", "--layout", str(FIX / "mutations" / "m01_m1_width.json"), "--report", "bad.json", "--svg", "bad.svg"],
        "extract": ["extract", "--layout", str(FIX / "nand4.json"), "--netlist", "nand4.sp", "--report", "ex.json"],
        "lvs": ["lvs", "--layout", str(FIX / "nand4.json"), "--schematic", str(FIX / "nand3.sp"), "--report", "lvs.json"],
        "pex": [
            "pex", "--layout", str(FIX / "chain9.json"), "--source", "IN", "--sink", "OUT",
            "--report", "pex.json", "--netlist", "chain9.sp",
        ],
    }
    out = {}
    for argv in runs.values():
        argv = [str(tmp / a) if a.endswith((".json", ".svg", ".sp")) and "/" not in a else a for a in argv]
        main(argv + w)
    for p in sorted(tmp.iterdir()):
        out[p.name] = p.read_bytes()
        p.unlink()
    return out


def test_criterion_9_determinism(tmp_path):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ref = _outputs(tmp_path, 1)
        same = all(_outputs(tmp_path, w) == ref for _ in range(5) for w in (1, 4))
    files = ", ".join(ref)
    record(9, same and len(ref) == 9, f"5 runs x workers {{1, 4}} byte-identical for {files}")

