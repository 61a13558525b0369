"""Linearised quantum dynamics of a ring BEC in a Laguerre-Gaussian cavity with a rotating mirror."""

__version__ = "0.1.0"
