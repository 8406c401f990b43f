#!/usr/bin/env python3
"""Generate the layout fixtures, reference schematics and DRC mutation corpus.

Every cell is 400 nm tall with fins running horizontally.  Rows that are
stacked vertically are mirrored so that neighbouring rows share a power rail
and an N-well.  The output is deterministic; re-run after editing.
"""

import copy
import json
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1] / "fixtures"
H = 400  # cell height


def box(x0, y0, x1, y1):
    return [x0, y0, x1, y1]


def add(cell, layer, *shapes):
    cell.setdefault("shapes", {}).setdefault(layer, []).extend(shapes)


def pin(cell, net, layer, x, y):
    cell.setdefault("pins", []).append({"net": net, "layer": layer, "at": [x, y]})


def inst(cell, name, x, y, mirror=False, rotate=0, label=""):
    d = {"cell": name, "at": [x, y], "rotate": rotate, "mirror": mirror}
    if label:
        d["name"] = label
    cell.setdefault("instances", []).append(d)


# ---------------------------------------------------------------------------
# leaf cells


def inverter(active_gate=True, cut=True, pins=True):
    """192 x 400 inverter: 3-fin NFIN and PFIN, dummies at both fin ends."""
    c = {}
    w = 192
    add(c, "M1A", box(0, 0, w, 28), box(0, 372, w, 400))  # VSS, VDD rails
    add(c, "NWELL", box(0, 200, w, 400))
    add(c, "ACT", box(32, 60, 160, 148), box(32, 252, 160, 340))
    gtop = 368 if cut else 352
    add(c, "GATEA", box(24, 40, 40, gtop), box(152, 40, 168, gtop))
    if active_gate:
        add(c, "GATEB", box(88, 40, 104, gtop))
    if cut:
        add(c, "GATEC", box(16, 348, 176, 368))
    add(c, "AIL1", box(56, 60, 72, 148), box(120, 60, 136, 148), box(56, 252, 72, 340), box(120, 252, 136, 340))
    add(c, "AIL2", box(56, 8, 72, 100), box(56, 300, 72, 392), box(120, 100, 136, 300))
    add(c, "V0", box(57, 10, 71, 24), box(57, 376, 71, 390), box(121, 193, 135, 207), box(63, 193, 77, 207))
    add(c, "GIL", box(60, 186, 104, 214))
    add(c, "M1B", box(56, 160, 84, 240))
    add(c, "M1A", box(98, 160, 142, 240))
    if pins:
        pin(c, "A", "M1B", 70, 200)
        pin(c, "ZN", "M1A", 128, 200)
        pin(c, "VDD", "M1A", 96, 386)
        pin(c, "VSS", "M1A", 96, 14)
    return c


NAND_GATES = (96, 160, 224, 288)


def nand4():
    """384 x 400 NAND4: series NFIN stack, four parallel PFINs."""
    c = {}
    w = 384
    add(c, "M1A", box(0, 0, w, 28), box(0, 372, w, 400))
    add(c, "NWELL", box(0, 200, w, 400))
    add(c, "ACT", box(32, 60, 352, 148), box(32, 252, 352, 340))
    add(c, "GATEA", box(24, 40, 40, 368), box(344, 40, 360, 368))
    for k, g in enumerate(NAND_GATES):
        add(c, "GATEB" if k % 2 == 0 else "GATEA", box(g - 8, 40, g + 8, 368))
    add(c, "GATEC", box(16, 348, 368, 368))
    # N row: VSS on the far left diffusion, ZN on the far right
    add(c, "AIL1", box(56, 60, 72, 148), box(312, 60, 328, 148))
    # P row: every diffusion contacted, alternating VDD / ZN
    for x in (64, 128, 192, 256, 320):
        add(c, "AIL1", box(x - 8, 252, x + 8, 340))
    add(c, "AIL2", box(56, 8, 72, 100))
    add(c, "V0", box(57, 10, 71, 24))
    for x in (64, 192, 320):
        add(c, "AIL2", box(x - 8, 300, x + 8, 392))
        add(c, "V0", box(x - 7, 376, x + 7, 390))
    add(c, "AIL2", box(120, 222, 328, 238), box(120, 222, 136, 300), box(248, 222, 264, 300), box(312, 100, 328, 238))
    add(c, "V0", box(313, 113, 327, 127))
    add(c, "M1B", box(306, 50, 334, 140))
    for k, g in enumerate(NAND_GATES, start=1):
        add(c, "GIL", box(g - 14, 186, g + 14, 214))
        add(c, "V0", box(g - 7, 193, g + 7, 207))
        add(c, "M1A", box(g - 14, 160, g + 14, 240))
        pin(c, f"A{k}", "M1A", g, 200)
    pin(c, "ZN", "M1B", 320, 100)
    pin(c, "VDD", "M1A", 192, 386)
    pin(c, "VSS", "M1A", 192, 14)
    return c


def tile_2x2(name, width):
    top = {}
    inst(top, name, 0, 0, label="X0")
    inst(top, name, width, 0, label="X1")
    inst(top, name, 0, 2 * H, mirror=True, label="X2")
    inst(top, name, width, 2 * H, mirror=True, label="X3")
    return top


def inv4_gatebar(cut=True):
    """Four inverter rows sharing one vertical gate bar.

    Each row's GIL lands on the bar; only GATEC cuts at the row boundaries
    keep the four inputs apart.
    """
    top = {}
    for k in range(4):
        mirror = k % 2 == 1
        inst(top, "INV_CORE", 0, (k + 1) * H if mirror else k * H, mirror=mirror, label=f"R{k}")
    add(top, "GATEB", box(88, 40, 104, 4 * H - 40))
    if cut:
        for k in range(1, 4):
            add(top, "GATEC", box(80, k * H - 30, 112, k * H + 30))
    # power straps on MINT1 tie the per-row rails together
    add(top, "MINT1A", box(150, 360, 178, 3 * H + 40))
    add(top, "MINT1B", box(20, 0, 48, 4 * H))
    for y in (H, 3 * H):
        add(top, "V1", box(157, y - 7, 171, y + 7))
    for y in (14, 2 * H, 4 * H - 14):
        add(top, "V1", box(27, y - 7, 41, y + 7))
    for k in range(4):
        y = lambda v: (k + 1) * H - v if k % 2 else k * H + v  # noqa: E731
        pin(top, f"A{k}", "M1B", 70, y(200))
        pin(top, f"ZN{k}", "M1A", 128, y(200))
    pin(top, "VDD", "MINT1A", 164, 2 * H)
    pin(top, "VSS", "MINT1B", 34, 2 * H)
    return top


def stitched_inverter():
    c = inverter(pins=False)
    add(c, "M1B", box(130, 186, 186, 228))
    pin(c, "A", "M1B", 70, 200)
    pin(c, "ZN", "M1B", 170, 200)
    pin(c, "VDD", "M1A", 96, 386)
    pin(c, "VSS", "M1A", 96, 14)
    return c


CHAIN_N = 9


def chain9():
    top = {}
    for k in range(CHAIN_N):
        inst(top, "INV_CORE_G", 192 * k, 0, label=f"I{k}")
        if k < CHAIN_N - 1:
            add(top, "M1A", box(192 * k + 142, 186, 192 * k + 262, 214))
    pin(top, "IN", "M1B", 70, 200)
    pin(top, "OUT", "M1A", 192 * (CHAIN_N - 1) + 128, 200)
    pin(top, "VDD", "M1A", 96, 386)
    pin(top, "VSS", "M1A", 96, 14)
    return top


def inv45_reference():
    """Planar 45 nm style inverter footprint for the density comparison."""
    c = {}
    w, h = 380, 1400
    add(c, "M1", box(0, 0, w, 65), box(0, h - 65, w, h))
    add(c, "NWELL", box(0, 700, w, h))
    add(c, "ACT", box(60, 150, 320, 560), box(60, 840, 320, 1250))
    add(c, "GATE", box(165, 100, 215, 1300))
    add(c, "M1", box(240, 200, 305, 1200), box(60, 650, 150, 750))
    pin(c, "VSS", "M1", 190, 30)
    return c


def plates():
    c = {}
    add(c, "M1A", box(0, 0, 1000, 1000), box(1100, 0, 2100, 1000))
    pin(c, "P1", "M1A", 500, 500)
    pin(c, "P2", "M1A", 1600, 500)
    return c


# ---------------------------------------------------------------------------
# DRC mutation corpus: (name, expected rule id, edit)


def _replace(layer, old, new):
    def f(c):
        shapes = c["shapes"][layer]
        shapes[shapes.index(old)] = new

    return f


def _extra(layer, shape):
    def f(c):
        add(c, layer, shape)

    return f


MUTATIONS = [
    ("m01_m1_width", "M1B.W.1", _replace("M1B", box(56, 160, 84, 240), box(56, 160, 82, 240))),
    ("m02_gate_length", "GATE.L.1", _replace("GATEB", box(88, 40, 104, 368), box(88, 40, 103, 368))),
    ("m03_act_quantized", "ACT.Q.1", _replace("ACT", box(32, 60, 160, 148), box(32, 60, 160, 120))),
    ("m04_same_color_spacing", "M1A.S.1", _extra("M1A", box(100, 48, 180, 76))),
    ("m05_diff_color_spacing", "M1.S.2", _extra("M1B", box(150, 160, 178, 240))),
    ("m06_min_area", "M1B.A.1", _replace("M1B", box(56, 160, 84, 240), box(56, 180, 84, 240))),
    ("m07_enclosure", "V0.EN.1", _replace("M1A", box(98, 160, 142, 240), box(98, 160, 142, 208))),
    ("m08_overlap", "V0.OV.1", _extra("V0", box(13, 7, 27, 21))),
    ("m09_gate_jog", "GATE.R.1", _extra("GATEB", box(88, 344, 124, 360))),
    ("m10_act_jog", "ACT.R.1", _extra("ACT", box(144, 148, 160, 188))),
    ("m11_gil_width", "GIL.W.1", _replace("GIL", box(60, 186, 104, 214), box(60, 194, 104, 206))),
    ("m12_gate_spacing", "GATEA.S.1", _extra("GATEA", box(0, 40, 16, 360))),
    ("m13_gatecut_width", "GATEC.W.1", _replace("GATEC", box(16, 348, 176, 368), box(16, 358, 176, 368))),
]


# ---------------------------------------------------------------------------
# reference schematics

SCHEMATICS = {
    "inv.sp": """* inverter reference schematic
.subckt INV A ZN VDD VSS
X1 ZN A VSS VSS NFIN nfin=3 l=16n
X2 ZN A VDD VDD PFIN nfin=3 l=16n
.ends
""",
    "nand4.sp": """* 4-input NAND reference schematic
.subckt NAND4 A1 A2 A3 A4 ZN VDD VSS
X1 n1 A1 VSS VSS NFIN nfin=3 l=16n
X2 n2 A2 n1 VSS NFIN nfin=3 l=16n
X3 n3 A3 n2 VSS NFIN nfin=3 l=16n
X4 ZN A4 n3 VSS NFIN nfin=3 l=16n
X5 ZN A1 VDD VDD PFIN nfin=3 l=16n
X6 ZN A2 VDD VDD PFIN nfin=3 l=16n
X7 ZN A3 VDD VDD PFIN nfin=3 l=16n
X8 ZN A4 VDD VDD PFIN nfin=3 l=16n
.ends
""",
    "nand3.sp": """* 3-input NAND reference schematic
.subckt NAND3 A1 A2 A3 ZN VDD VSS
X1 n1 A1 VSS VSS NFIN nfin=3 l=16n
X2 n2 A2 n1 VSS NFIN nfin=3 l=16n
X3 ZN A3 n2 VSS NFIN nfin=3 l=16n
X4 ZN A1 VDD VDD PFIN nfin=3 l=16n
X5 ZN A2 VDD VDD PFIN nfin=3 l=16n
X6 ZN A3 VDD VDD PFIN nfin=3 l=16n
.ends
""",
    "inv4.sp": "* four independent inverters\n.subckt INV4 A0 A1 A2 A3 ZN0 ZN1 ZN2 ZN3 VDD VSS\n"
    + "".join(
        f"X{2 * k + 1} ZN{k} A{k} VSS VSS NFIN nfin=3 l=16n\nX{2 * k + 2} ZN{k} A{k} VDD VDD PFIN nfin=3 l=16n\n"
        for k in range(4)
    )
    + ".ends\n",
}


def write(name, cells):
    path = ROOT / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"schema_version": 1, "cells": cells}, indent=1, sort_keys=True) + "\n")


def main():
    inv = inverter()
    write("inv.json", {"INV": inv})
    write("nand4.json", {"NAND4": nand4()})
    write("inv_tiled_2x2.json", {"INV": inv, "INV_2X2": tile_2x2("INV", 192)})
    write("nand4_tiled.json", {"NAND4": nand4(), "NAND4_2X2": tile_2x2("NAND4", 384)})
    core = inverter(active_gate=False, cut=False, pins=False)
    write("inv4_gatebar.json", {"INV_CORE": core, "INV4": inv4_gatebar(cut=True)})
    write("inv4_gatebar_nocut.json", {"INV_CORE": core, "INV4": inv4_gatebar(cut=False)})
    write("inv_stitched.json", {"INV": stitched_inverter()})
    write("chain9.json", {"INV_CORE_G": inverter(pins=False), "CHAIN9": chain9()})
    write("inv45_reference.json", {"INV45": inv45_reference()})
    write("plates_1um.json", {"PLATES": plates()})

    manifest = []
    for name, rule_id, edit in MUTATIONS:
        c = copy.deepcopy(inv)
        edit(c)
        write(f"mutations/{name}.json", {"INV": c})
        manifest.append({"file": f"{name}.json", "top": "INV", "expected": [rule_id]})
    (ROOT / "mutations" / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")

    for fname, text in SCHEMATICS.items():
        (ROOT / fname).write_text(text)
    print(f"wrote fixtures to {ROOT}")


if __name__ == "__main__":
    main()
