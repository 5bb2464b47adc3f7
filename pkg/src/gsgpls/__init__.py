"""Geometric semantic GP for symbolic regression with local-search mutation,
basis-function local search and overfitting controls."""

__version__ = "0.1.0"
