"""Coloring rings with non-signaling and independent random colorings: enumeration, LPs and bounds."""

__version__ = "0.1.0"
