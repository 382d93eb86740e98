"""Exact-arithmetic toolkit for derived series, maximal m-step solvable
quotients, Fox calculus and centralizer experiments in finite groups."""

__version__ = "0.1.0"
