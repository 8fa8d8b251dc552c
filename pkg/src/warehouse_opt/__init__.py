"""Warehouse layout optimization: quality-diversity search over storage
layouts, mixed-integer layout repair, and a lifelong multi-agent simulator."""

__version__ = "0.1.0"

from warehouse_opt.layouts import (
    Layout,
    LayoutError,
    LayoutFormatError,
    Scenario,
    StorageRect,
    TileType,
    ValidationReport,
    layout_from_json,
    layout_to_json,
    parse_layout,
    serialize_layout,
    validate,
)

__all__ = [
    "Layout",
    "LayoutError",
    "LayoutFormatError",
    "Scenario",
    "StorageRect",
    "TileType",
    "ValidationReport",
    "layout_from_json",
    "layout_to_json",
    "parse_layout",
    "serialize_layout",
    "validate",
    "__version__",
]
