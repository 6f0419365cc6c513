"""Parallel random walks on graphs: simulation, exact oracles and bounds."""

__version__ = "0.1.0"
