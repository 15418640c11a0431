"""Exact simulation and verification of piecewise-linear hetero-chaotic maps."""

__version__ = "0.1.0"
