"""Generalization of global minima: simulations, exact enumeration, density-of-classifiers model."""

__version__ = "0.1.0"
