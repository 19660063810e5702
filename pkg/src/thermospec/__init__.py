"""Multifractal spectra of symbolic dynamical systems through topological pressure."""

__version__ = "0.1.0"
