"""Workbench for elliptic (p,q)-difference systems."""

__version__ = "0.1.0"
