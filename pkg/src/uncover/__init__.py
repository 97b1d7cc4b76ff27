"""Verification of uninterpreted programs by streaming congruence closure."""

__version__ = "0.1.0"
