"""Numerical laboratory for hyperboloid-averaged fields and their asymptotic limits."""

__version__ = "0.1.0"
