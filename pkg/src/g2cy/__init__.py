"""Exact and spectral computations for SU(3) and G2 structures and their gluing."""

__version__ = "0.1.0"
