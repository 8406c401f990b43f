"""Parasitic extraction, back-annotation and Elmore delay."""

from finverify.pex.extract import (
    MODELS,
    PexError,
    PexResult,
    aggregate,
    coupling_value,
    extract_parasitics,
    layer_k,
    wire_ground_cap,
)
from finverify.pex.models import (
    EPS0,
    ModelValidityWarning,
    WireGeometry,
    cap_parallel_plate,
    cap_plate_with_fringe,
    cap_sakurai_coupling,
    cap_sakurai_total,
    plate_vs_full,
    sakurai_coupling_per_length,
    sakurai_total_per_length,
)
from finverify.pex.annotate import annotate_netlist, node_net
from finverify.pex.elmore import ElmoreError, ElmoreResult, elmore_summary

__all__ = [
    "EPS0",
    "ElmoreError",
    "ElmoreResult",
    "MODELS",
    "ModelValidityWarning",
    "PexError",
    "PexResult",
    "WireGeometry",
    "aggregate",
    "annotate_netlist",
    "cap_parallel_plate",
    "cap_plate_with_fringe",
    "cap_sakurai_coupling",
    "cap_sakurai_total",
    "coupling_value",
    "elmore_summary",
    "extract_parasitics",
    "layer_k",
    "node_net",
    "plate_vs_full",
    "sakurai_coupling_per_length",
    "sakurai_total_per_length",
    "wire_ground_cap",
]
