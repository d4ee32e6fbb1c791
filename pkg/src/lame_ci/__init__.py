"""Spectral engine for a convex-integration iteration on the nonlinear Lamé system."""
__version__ = "0.1.0"
