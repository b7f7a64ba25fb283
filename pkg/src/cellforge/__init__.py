"""Gear-ratio-aware standard-cell layout synthesis."""

__version__ = "0.1.0"
