"""Numerical verification of the Gauss-Bonnet-Chern theorem via the transgression form."""

__version__ = "0.1.0"
