"""Approximate gradient coding: codes, decoders, bounds and simulation harnesses"""

__version__ = "1.0.0"
