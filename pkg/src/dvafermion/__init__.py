"""Exact verification of the deformed Virasoro algebra in its free-fermion realizations."""

__version__ = "0.1.0"
