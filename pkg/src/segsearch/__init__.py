"""Behavioral-search agent over a self-organizing spatial graph."""

__version__ = "0.1.0"
