"""Numerical verification of Hermite-Hadamard type bounds for strongly phi_h-convex functions."""

__version__ = "0.1.0"
