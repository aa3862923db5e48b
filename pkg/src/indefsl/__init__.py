"""Eigenvalue computations for Sturm-Liouville operators with an indefinite weight."""
__version__ = "0.1.0"
