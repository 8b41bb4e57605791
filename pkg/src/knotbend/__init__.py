"""Infinitesimal bending of closed space curves."""

__version__ = "0.1.0"
