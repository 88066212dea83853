"""Bayesian spatial modeling of threshold exceedances via gamma rate mixtures."""

__version__ = "0.1.0"
