"""Generalized Feynman-Kac path-integral Monte Carlo for few-electron atoms."""

__version__ = "0.1.0"
