"""Exact diagonalisation and cumulant-expansion tools for complex SYK_q quench dynamics."""

__version__ = "0.1.0"
