"""Layout extraction, audit, metrics, rendering and the ``.layout`` format."""
from .audit import AuditReport, Violation, audit
from .extract import ExtractionError, extract
from .io import LayoutFormatError, parse, serialize
from .metrics import metrics
from .render import render_svg
from .types import Contact, Cut, Layout, Merge, Metrics, Pin, PlacedDevice, Segment, Via

__all__ = [
    "AuditReport", "Contact", "Cut", "ExtractionError", "Layout", "LayoutFormatError", "Merge", "Metrics",
    "Pin", "PlacedDevice", "Segment", "Via", "Violation", "audit", "extract", "metrics", "parse",
    "render_svg", "serialize",
]
