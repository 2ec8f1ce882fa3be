"""Dissipative cross-stitch lattice with impurities."""

__version__ = "0.1.0"
