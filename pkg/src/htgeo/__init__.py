"""Exact Hitchin-Thorpe obstruction calculus and numerical geometry of ALF
gravitational instantons."""

__version__ = "0.1.0"
