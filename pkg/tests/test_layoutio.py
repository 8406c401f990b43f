import json
import re

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finverify.drc import Violation
from finverify.geometry import Rect, normalize
from finverify.layoutio import (
    LayoutError,
    dump_layout,
    flat_from_rects,
    load_layout,
    parse_layout,
    render_svg,
    svg_text,
)

from conftest import FIX, flat


def doc(cells):
    return {"schema_version": 1, "cells": cells}


def test_inverter_layers(tech):
    lib = load_layout(FIX / "inv.json", tech)
    assert lib.top_cells() == ["INV"]
    drawn = set(lib["INV"].shapes)
    assert {"ACT", "GATEA", "GATEB", "GATEC", "AIL1", "AIL2", "GIL", "M1A"} <= drawn
    assert {p.net for p in lib["INV"].pins} >= {"VDD", "VSS", "ZN"}


def test_empty_cell(tech):
    lib = parse_layout(doc({"E": {}}), tech)
    f = lib.flatten("E")
    assert dict(f.layers) == {} and f.bbox() is None


def test_unknown_layer(tech):
    with pytest.raises(LayoutError, match="unknown layer 'METAL99'"):
        parse_layout(doc({"X": {"shapes": {"METAL99": [[0, 0, 10, 10]]}}}), tech)


def test_off_grid_reports_remainder(tech):
    with pytest.raises(LayoutError, match=r"remainder 0\.5 nm"):
        parse_layout(doc({"X": {"shapes": {"M1A": [[0, 0, 10.5, 10]]}}}), tech)


def test_non_rectilinear_rejected(tech):
    with pytest.raises(LayoutError, match="non-rectilinear"):
        parse_layout(doc({"X": {"shapes": {"M1A": [[[0, 0], [10, 0], [10, 10], [0, 5]]]}}}), tech)


def test_cycle_rejected(tech):
    cells = {"A": {"instances": [{"cell": "B"}]}, "B": {"instances": [{"cell": "A"}]}}
    with pytest.raises(LayoutError, match="cyclic instantiation: A -> B -> A"):
        parse_layout(doc(cells), tech)


def test_undefined_cell_and_stray_pin(tech):
    with pytest.raises(LayoutError, match="undefined cell 'Q'"):
        parse_layout(doc({"A": {"instances": [{"cell": "Q"}]}}), tech)
    bad_pin = {"A": {"shapes": {"M1A": [[0, 0, 10, 10]]}, "pins": [{"net": "n", "layer": "M1A", "at": [50, 50]}]}}
    with pytest.raises(LayoutError, match="not on a M1A shape"):
        parse_layout(doc(bad_pin), tech)


def test_tiling_area_and_counts(tech):
    one = flat("inv.json", "INV")
    four = flat("inv_tiled_2x2.json", "INV_2X2")
    lib = load_layout(FIX / "inv_tiled_2x2.json", tech)
    raw = {k: sum(p.area for p in s.polygons) for k, s in lib["INV"].shapes.items()}
    for name, s in four.layers.items():
        assert len(s) <= 4 * len(one.layers[name])
        # area is exact where tiles do not overlap; abutting tiles can only merge
        assert s.area <= 4 * one.layers[name].area
    for name in ("ACT", "GATEC", "AIL1", "V0"):
        assert four.layers[name].area == 4 * one.layers[name].area == 4 * raw[name]


def test_flatten_without_instances_is_identity(tech):
    lib = load_layout(FIX / "inv.json", tech)
    f = lib.flatten("INV")
    for name, s in lib["INV"].shapes.items():
        assert f.layers[name] == normalize(s)


def test_instance_translation(tech):
    cells = {
        "LEAF": {"shapes": {"M1A": [[0, 0, 28, 200]], "ACT": [[[0, 0], [90, 0], [90, 40], [40, 40], [40, 90], [0, 90]]]}},
        "TOP": {"instances": [{"cell": "LEAF", "at": [1000, 0]}]},
    }
    lib = parse_layout(doc(cells), tech)
    leaf, top = lib.flatten("LEAF"), lib.flatten("TOP")
    for name in leaf.layers:
        a, b = leaf.layers[name].rects, top.layers[name].rects
        assert np.array_equal(b - a, np.tile([1000, 0, 1000, 0], (len(a), 1)))


@given(st.integers(-5000, 5000), st.integers(-5000, 5000), st.sampled_from([0, 90, 180, 270]), st.booleans())
@settings(max_examples=25, deadline=None)
def test_flatten_translation_equivariant(dx, dy, rot, mirror):
    from conftest import _tech

    tech = _tech()
    leaf = json.loads((FIX / "inv.json").read_text())["cells"]["INV"]
    leaf = {k: v for k, v in leaf.items() if k != "pins"}
    placed = {"LEAF": leaf, "TOP": {"instances": [{"cell": "LEAF", "rotate": rot, "mirror": mirror}]}}
    moved = {"LEAF": leaf, "TOP": {"instances": [{"cell": "LEAF", "at": [dx, dy], "rotate": rot, "mirror": mirror}]}}
    a = parse_layout(doc(placed), tech).flatten("TOP").translate(dx, dy)
    b = parse_layout(doc(moved), tech).flatten("TOP")
    assert dict(a.layers) == dict(b.layers)


@pytest.mark.parametrize("name, top", [("inv.json", "INV"), ("nand4_tiled.json", "NAND4_2X2"), ("inv_stitched.json", None)])
def test_dump_round_trip(tech, name, top):
    lib = load_layout(FIX / name, tech)
    top = top or lib.top_cells()[0]
    again = parse_layout(json.loads(json.dumps(dump_layout(lib))), tech)
    assert sorted(again.cells) == sorted(lib.cells)
    assert dict(again.flatten(top).layers) == dict(lib.flatten(top).layers)
    assert again.flatten(top).pins == lib.flatten(top).pins


def test_parse_error_location(tmp_path, tech):
    p = tmp_path / "broken.json"
    p.write_text('{"schema_version": 1,\n "cells": {,}}')
    with pytest.raises(LayoutError, match=r"broken.json:2:"):
        load_layout(p, tech)


def test_svg_groups_and_marker(tech, tmp_path):
    f = flat("inv.json", "INV")
    text = svg_text(f, [], order=tech.layers)
    groups = re.findall(r'<g id="layer-([^"]+)"', text)
    assert groups == [n for n in tech.layers if n in f.layers]
    assert "violation" not in text

    v = Violation("M1.S.1", ("M1A",), Rect(40, 60, 66, 200), 20, 28, "spacing 20 < 28")
    text = svg_text(f, [v])
    marks = re.findall(r'<rect class="violation" x="(-?\d+)" y="(-?\d+)" width="(\d+)" height="(\d+)">', text)
    assert marks == [("40", "60", "26", "140")]
    assert "<title>M1.S.1</title>" in text

    p1, p2 = tmp_path / "a.svg", tmp_path / "b.svg"
    render_svg(f, [v], p1)
    render_svg(f, [v], p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_flat_from_rects_rejects_unknown_layer(tech):
    with pytest.raises(Exception, match="METAL99"):
        flat_from_rects(tech, {"METAL99": np.array([[0, 0, 1, 1]])})
