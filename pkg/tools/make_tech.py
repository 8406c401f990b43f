#!/usr/bin/env python3
"""Generate the shipped tech file ``src/finverify/data/freepdk15.json``.

Numbers marked ``placeholder`` are plausibility values, not calibrated
process data.  Re-run after editing; the output is deterministic.
"""

import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "finverify" / "data" / "freepdk15.json"

K_SIN, K_SIO2, K_TEOS = 7.5, 3.9, 4.1

# (name, width, thickness, resistivity Ω·µm, colored)
METALS = (
    [("M1", 28, 56, 0.04, True)]
    + [(f"MINT{k}", 28, 56, 0.04, True) for k in range(1, 6)]
    + [(f"MSMG{k}", 64, 128, 0.03, False) for k in range(1, 5)]
    + [(f"MG{k}", 400, 800, 0.022, False) for k in range(1, 4)]
)
VIA_NAMES = ["V1", "VINT1", "VINT2", "VINT3", "VINT4", "VINT5", "VSMG1", "VSMG2", "VSMG3", "VSMG4", "VG1", "VG2"]
VIA_OHMS = {"V": 20.0, "VINT": 20.0, "VSMG": 8.0, "VG": 1.5}


def layer(name, cls, level, color="NONE", base=None, electrical=None):
    d = {"name": name, "class": cls, "level": level, "color": color}
    if base:
        d["base"] = base
    if electrical:
        d["electrical"] = electrical
    return d


def elec(t, h, rho=None, via=None, k_above=K_TEOS, k_below=K_TEOS):
    d = {"thickness_nm": t, "height_nm": h, "k_above": k_above, "k_below": k_below}
    if rho is not None:
        d["resistivity_ohm_um"] = rho
    if via is not None:
        d["via_resistance_ohm"] = via
    return d


def main():
    layers = [
        layer("NWELL", "WELL", 0),
        layer("ACT", "ACTIVE", 0, electrical=elec(42, 0, rho=0.5, k_above=K_SIN, k_below=K_SIN)),
        layer("GATE", "GATE", 0, electrical=elec(28, 42, rho=0.2, k_above=K_SIN, k_below=K_SIN)),
        layer("GATEA", "GATE", 0, "A", "GATE", elec(28, 42, rho=0.2, k_above=K_SIN, k_below=K_SIN)),
        layer("GATEB", "GATE", 0, "B", "GATE", elec(28, 42, rho=0.2, k_above=K_SIN, k_below=K_SIN)),
        layer("GATEC", "GATE_CUT", 0),
        layer("AIL1", "MOL", 0, electrical=elec(38, 42, rho=0.15, via=40.0, k_above=K_SIN, k_below=K_SIN)),
        layer("GIL", "MOL", 0, electrical=elec(40, 70, rho=0.15, via=40.0, k_above=K_SIO2, k_below=K_SIN)),
        layer("AIL2", "MOL", 0, electrical=elec(30, 80, rho=0.15, via=30.0, k_above=K_SIO2, k_below=K_SIO2)),
        layer("V0", "VIA", 0, electrical=elec(30, 110, via=30.0, k_above=K_SIO2, k_below=K_SIO2)),
    ]
    h = 140
    metal_tops = {}
    for lvl, (name, w, t, rho, col) in enumerate(METALS, start=1):
        e = elec(t, h, rho=rho)
        layers.append(layer(name, "METAL", lvl, electrical=e))
        if col:
            layers += [layer(name + c, "METAL", lvl, c, name, e) for c in "AB"]
        metal_tops[lvl] = (h, t)
        if lvl < len(METALS):
            vname = VIA_NAMES[lvl - 1]
            prefix = vname.rstrip("0123456789")
            layers.append(layer(vname, "VIA", lvl, electrical=elec(t, h + t, via=VIA_OHMS[prefix])))
            h += 2 * t

    top = metal_tops[len(METALS)][0] + metal_tops[len(METALS)][1] + 1000
    dielectrics = [
        {"name": "SiN", "bottom_nm": 0, "top_nm": 80, "k": K_SIN},
        {"name": "SiO2", "bottom_nm": 80, "top_nm": 140, "k": K_SIO2},
        {"name": "TEOS", "bottom_nm": 140, "top_nm": top, "k": K_TEOS},
    ]

    connectivity = [
        {"a": "ACT", "b": "AIL1", "mode": "OVERLAP"},
        {"a": "AIL1", "b": "AIL2", "mode": "OVERLAP"},
        {"a": "AIL2", "b": "M1", "mode": "THROUGH_VIA", "via": "V0"},
        {"a": "GATE", "b": "GIL", "mode": "OVERLAP"},
        {"a": "GIL", "b": "M1", "mode": "THROUGH_VIA", "via": "V0"},
        {"a": "GIL", "b": "AIL2", "mode": "OVERLAP"},
    ]
    for lvl in range(1, len(METALS)):
        connectivity.append(
            {"a": METALS[lvl - 1][0], "b": METALS[lvl][0], "mode": "THROUGH_VIA", "via": VIA_NAMES[lvl - 1]}
        )

    rules = []

    def rule(rid, kind, layers_, **kw):
        rules.append({"id": rid, "kind": kind, "layers": layers_, **kw})

    def width_space(name, w, colors):
        members = [name] + ([name + "A", name + "B"] if colors else [])
        for m in members:
            rule(f"{m}.W.1", "MIN_WIDTH", [m], value=w)
            rule(f"{m}.S.1", "MIN_SPACING_SAME_COLOR", [m], value=w)
        if colors:
            rule(f"{name}.S.2", "MIN_SPACING_DIFF_COLOR", [name + "A"], other=[name + "B"], value=w // 2)

    rule("NWELL.W.1", "MIN_WIDTH", ["NWELL"], value=100)
    rule("NWELL.S.1", "MIN_SPACING_SAME_COLOR", ["NWELL"], value=100)
    rule("ACT.W.1", "MIN_WIDTH", ["ACT"], value=8)
    rule("ACT.S.1", "MIN_SPACING_SAME_COLOR", ["ACT"], value=40)
    rule("ACT.Q.1", "WIDTH_QUANTIZED", ["ACT"], base=8, step=40)
    rule("ACT.R.1", "RECT_ONLY", ["ACT"])
    width_space("GATE", 14, True)
    rule("GATE.L.1", "DISCRETE_LENGTH", ["GATE", "GATEA", "GATEB"], values=[14, 16, 20])
    rule("GATE.R.1", "RECT_ONLY", ["GATE", "GATEA", "GATEB"])
    rule("GATEC.W.1", "MIN_WIDTH", ["GATEC"], value=20)
    rule("GATEC.S.1", "MIN_SPACING_SAME_COLOR", ["GATEC"], value=20)
    for name in ("AIL1", "AIL2", "GIL"):
        rule(f"{name}.W.1", "MIN_WIDTH", [name], value=16)
        rule(f"{name}.S.1", "MIN_SPACING_SAME_COLOR", [name], value=16)
    rule("V0.W.1", "MIN_WIDTH", ["V0"], value=14)
    rule("V0.S.1", "MIN_SPACING_SAME_COLOR", ["V0"], value=14)
    rule("V0.EN.1", "ENCLOSURE", ["V0"], outer=["M1", "M1A", "M1B"], value=2)
    rule("V0.OV.1", "OVERLAP", ["V0"], outer=["AIL2", "GIL"], value=100)
    for name, w, t, rho, col in METALS:
        width_space(name, w, col)
        fam = [name] + ([name + "A", name + "B"] if col else [])
        for m in fam:
            rule(f"{m}.A.1", "MIN_AREA", [m], value=2000 if w == 28 else 4 * w * w)
    for lvl, vname in enumerate(VIA_NAMES, start=1):
        lower, upper = METALS[lvl - 1], METALS[lvl]
        size = min(lower[1], upper[1]) // 2
        rule(f"{vname}.W.1", "MIN_WIDTH", [vname], value=size)
        rule(f"{vname}.S.1", "MIN_SPACING_SAME_COLOR", [vname], value=size)
        for side, m in (("L", lower), ("U", upper)):
            fam = [m[0]] + ([m[0] + "A", m[0] + "B"] if m[4] else [])
            rule(f"{vname}.EN.{side}", "ENCLOSURE", [vname], outer=fam, value=2)

    doc = {
        "schema_version": 1,
        "name": "FreePDK15-predictive",
        "note": "Rule values other than M1 width 28 nm, fin pitch 40 nm and gate lengths {14,16,20} nm are placeholders.",
        "orientation": {"fin_direction": "horizontal"},
        "fin_params": {"w_fin_nm": 8, "pitch_fin_nm": 40, "allowed_gate_lengths_nm": [14, 16, 20]},
        "aliases": {"GATEAB": "GATE"},
        "bulk_nets": {"NFIN": "VSS", "PFIN": "VDD"},
        "switch_model": {
            "note": "placeholder switch-level device model for Elmore estimates",
            "reference_length_nm": 16,
            "r_on_ohm_per_fin": {"NFIN": 9000.0, "PFIN": 11000.0},
            "c_gate_af_per_fin": 25.0,
            "cj_af_per_nm2": 0.002,
            "cjsw_af_per_nm": 0.02,
        },
        "coupling_window_factor": 10,
        "layers": layers,
        "dielectrics": dielectrics,
        "connectivity": connectivity,
        "rules": rules,
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(doc, indent=1) + "\n")
    print(f"wrote {OUT} ({len(layers)} layers, {len(rules)} rules)")


if __name__ == "__main__":
    main()
