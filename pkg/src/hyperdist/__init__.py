"""Numerical workbench for omega-net representatives of distributions."""

__version__ = "0.1.0"
