"""Connectivity extraction, FinFET recognition, netlist I/O and LVS."""

from finverify.netex.extract import (
    Extraction,
    ExtractionError,
    LabelConflictError,
    LabelConflictWarning,
    Net,
    ShapeRef,
    effective_gate,
    extract,
    extract_connectivity,
    extraction_view,
    recognize_devices,
)
from finverify.netex.lvs import LvsResult, lvs_compare
from finverify.netex.netlist import (
    DeviceGeometry,
    FinDevice,
    Netlist,
    NetlistError,
    ParasiticElement,
    device_geometry,
    drawn_width,
    n_fin_from_width,
    netlist_text,
    parse_netlist,
    planar_geometry,
    read_netlist,
    write_netlist,
)

__all__ = [
    "DeviceGeometry",
    "Extraction",
    "ExtractionError",
    "FinDevice",
    "LabelConflictError",
    "LabelConflictWarning",
    "LvsResult",
    "Net",
    "Netlist",
    "NetlistError",
    "ParasiticElement",
    "ShapeRef",
    "device_geometry",
    "drawn_width",
    "effective_gate",
    "extract",
    "extract_connectivity",
    "extraction_view",
    "lvs_compare",
    "n_fin_from_width",
    "netlist_text",
    "parse_netlist",
    "planar_geometry",
    "read_netlist",
    "recognize_devices",
    "write_netlist",
]
