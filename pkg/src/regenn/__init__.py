"""Recurrent graph-evolution forecasting for multiple multivariate time-series."""

__version__ = "0.1.0"
