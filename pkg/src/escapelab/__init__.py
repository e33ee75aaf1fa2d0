"""Simulation and numerical checks for shift selfsimilar additive sequences,
OU-type stationary sequences and b-decomposable laws."""

__version__ = "0.1.0"
