"""Command-line driver: ``finverify {drc,extract,lvs,pex,report} ...``.

Exit codes: 0 clean / MATCH / success, 1 violations / MISMATCH / short,
2 usage or input errors.  Reports are JSON and written atomically;
stdout carries a short human-readable summary only.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

from finverify._io import atomic_write_text
from finverify.drc import report_json, run_drc
from finverify.geometry import GeometryError
from finverify.layoutio import FlatLayout, LayoutError, load_layout, render_svg
from finverify.netex import ExtractionError, LabelConflictError, LabelConflictWarning, NetlistError, extract, lvs_compare, netlist_text, read_netlist
from finverify.pex import MODELS, ElmoreError, PexError, annotate_netlist, elmore_summary, extract_parasitics
from finverify.techdb import TechError, load_tech

COMMANDS = ("drc", "extract", "lvs", "pex", "report")
INPUT_ERRORS = (TechError, LayoutError, NetlistError, GeometryError, ExtractionError, PexError, ElmoreError, OSError)


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    tech: str | None
    layout: str
    top: str | None
    schematic: str | None = None
    model: str = "sakurai+coupling"
    workers: int = 1
    report: str | None = None
    svg: str | None = None
    netlist: str | None = None
    strict: bool = False
    compare: str | None = None
    compare_top: str | None = None
    source: str | None = None
    sink: str | None = None


def density_report(layout: FlatLayout, other: FlatLayout | None = None) -> dict:
    """Bounding-box area, per-layer covered area and the bbox-area ratio to ``other``."""
    bb = layout.bbox()
    area = bb.area if bb else 0
    layers = {k: int(v) for k, v in layout.layer_areas().items()}
    out = {
        "name": layout.name,
        "bbox": list(bb) if bb else None,
        "bbox_area_nm2": int(area),
        "layer_area_nm2": layers,
        "layer_area_total_nm2": sum(layers.values()),
    }
    if other is not None:
        ob = other.bbox()
        oarea = ob.area if ob else 0
        out["other"] = {"name": other.name, "bbox_area_nm2": int(oarea)}
        out["area_ratio"] = area / oarea if oarea else None
    return out


def _dump(doc) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="finverify", description="DRC, extraction/LVS and parasitic extraction for a 15 nm FinFET PDK")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON file with default values for these flags")
        s.add_argument("--tech", help="technology JSON (default: $FINVERIFY_TECH or the bundled PDK)")
        s.add_argument("--layout", help="layout JSON")
        s.add_argument("--top", help="top cell (default: the single uninstantiated cell)")
        s.add_argument("--report", help="write the JSON report here")
        s.add_argument("--workers", type=int, help="DRC worker threads")
        s.add_argument("--strict", action="store_true", default=None, help="label conflicts are errors")
        if name == "drc":
            s.add_argument("--svg", help="write an SVG with violation markers")
        if name in ("extract", "lvs", "pex"):
            s.add_argument("--netlist", help="write the (annotated) netlist here")
        if name == "lvs":
            s.add_argument("--schematic", help="reference netlist")
        if name == "pex":
            s.add_argument("--model", choices=MODELS, help="capacitance model")
            s.add_argument("--source", help="source pin for the Elmore summary")
            s.add_argument("--sink", help="sink pin for the Elmore summary")
        if name == "report":
            s.add_argument("--compare", help="second layout for the density ratio")
            s.add_argument("--compare-top", dest="compare_top", help="top cell of the second layout")
    return p


def parse_config(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    vals = {}
    if ns.config:
        try:
            vals = json.loads(Path(ns.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"config {ns.config}: {exc}") from None
        if not isinstance(vals, dict):
            raise UsageError(f"config {ns.config}: expected a JSON object")
        unknown = set(vals) - set(RunConfig.__dataclass_fields__) - {"command"}
        if unknown:
            raise UsageError(f"config {ns.config}: unknown keys {sorted(unknown)}")
    for k, v in vars(ns).items():
        if k != "config" and v is not None:
            vals[k] = v
    vals["command"] = ns.command
    if not vals.get("layout"):
        raise UsageError("--layout is required")
    if ns.command == "lvs" and not vals.get("schematic"):
        raise UsageError("lvs needs --schematic")
    if vals.get("model", "sakurai+coupling") not in MODELS:
        raise UsageError(f"--model must be one of {', '.join(MODELS)}")
    if bool(vals.get("source")) != bool(vals.get("sink")):
        raise UsageError("--source and --sink go together")
    cfg = RunConfig(
        **{k: vals.get(k) for k in ("command", "tech", "layout", "top")},
        **{k: vals[k] for k in RunConfig.__dataclass_fields__ if k in vals and k not in ("command", "tech", "layout", "top")},
    )
    cfg.strict = bool(cfg.strict)
    if cfg.workers < 1:
        raise UsageError("--workers must be >= 1")
    return cfg


def _flatten(path, top, tech) -> FlatLayout:
    lib = load_layout(path, tech)
    if top is None:
        tops = lib.top_cells()
        if len(tops) != 1:
            raise UsageError(f"{path}: pick a top cell with --top (candidates: {', '.join(tops)})")
        top = tops[0]
    if top not in lib.cells:
        raise UsageError(f"{path}: no cell named {top!r}")
    return lib.flatten(top)


def _extract(cfg, layout, tech):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", LabelConflictWarning)
        ex = extract(layout, tech, strict=cfg.strict)
    for w in caught:
        if issubclass(w.category, LabelConflictWarning):
            print(f"warning: {w.message}", file=sys.stderr)
    return ex


def run(cfg: RunConfig) -> int:
    tech = load_tech(cfg.tech)
    layout = _flatten(cfg.layout, cfg.top, tech)

    if cfg.command == "drc":
        vs = run_drc(layout, tech, workers=cfg.workers)
        if cfg.report:
            atomic_write_text(cfg.report, report_json(vs))
        if cfg.svg:
            render_svg(layout, vs, cfg.svg)
        print(f"{layout.name}: {len(vs)} violation(s)")
        for v in vs:
            print(f"  {v.rule_id} at {tuple(v.location)}: {v.message}")
        return 1 if vs else 0

    if cfg.command == "report":
        other = _flatten(cfg.compare, cfg.compare_top, tech) if cfg.compare else None
        doc = density_report(layout, other)
        if cfg.report:
            atomic_write_text(cfg.report, _dump(doc))
        msg = f"{layout.name}: bbox area {doc['bbox_area_nm2']} nm^2"
        if other is not None and doc["area_ratio"] is not None:
            msg += f", ratio vs {other.name} = {doc['area_ratio']:.4f}"
        print(msg)
        return 0

    ex = _extract(cfg, layout, tech)
    nl = ex.netlist()

    if cfg.command == "extract":
        if cfg.netlist:
            atomic_write_text(cfg.netlist, netlist_text(nl))
        doc = {
            "name": nl.name,
            "devices": len(nl.devices),
            "nets": list(nl.nets),
            "ports": list(nl.ports),
            "shorts": [list(s) for s in ex.shorts],
        }
        if cfg.report:
            atomic_write_text(cfg.report, _dump(doc))
        print(f"{nl.name}: {len(nl.devices)} device(s), {len(nl.nets)} net(s), {len(ex.shorts)} short(s)")
        return 1 if ex.shorts else 0

    if cfg.command == "lvs":
        ref = read_netlist(cfg.schematic)
        res = lvs_compare(nl, ref)
        if cfg.netlist:
            atomic_write_text(cfg.netlist, netlist_text(nl))
        if cfg.report:
            atomic_write_text(cfg.report, res.to_json())
        print(f"{nl.name} vs {ref.name}: {res.verdict}")
        for d in res.diagnostics:
            print(f"  {d}")
        return 0 if res.match else 1

    # pex
    pr = extract_parasitics(ex, tech, cfg.model)
    an = annotate_netlist(nl, pr)
    if cfg.netlist:
        atomic_write_text(cfg.netlist, netlist_text(an))
    doc = json.loads(pr.report_json(cfg.model))
    if cfg.source:
        doc["elmore"] = elmore_summary(an, cfg.source, cfg.sink, tech.switch_model).to_dict()
    if cfg.report:
        atomic_write_text(cfg.report, _dump(doc))
    ctot = sum(v["C_ground_aF"] + v["C_coupling_aF"] for v in doc["nets"].values())
    print(f"{nl.name}: {len(an.elements)} parasitic element(s), model {cfg.model}, total C {ctot:.3f} aF")
    if "elmore" in doc:
        print(f"  Elmore {cfg.source} -> {cfg.sink}: {doc['elmore']['delay_s'] * 1e12:.4f} ps")
    return 0


def main(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
        return run(cfg)
    except SystemExit as exc:  # argparse usage errors
        return 2 if exc.code else 0
    except LabelConflictError as exc:
        print(f"finverify: short: {exc}", file=sys.stderr)
        return 1
    except UsageError as exc:
        print(f"finverify: error: {exc}", file=sys.stderr)
        return 2
    except INPUT_ERRORS as exc:
        print(f"finverify: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
