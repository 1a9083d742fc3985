"""Numerical verification of non-Noether symmetries for integrable systems"""

__version__ = "1.0.0"
