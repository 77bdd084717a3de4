"""Numerical operators for the V-line transform on the circle and the weighted
conical Radon transform on the cylinder, with their inversion pipelines."""

__version__ = "0.1.0"
