"""Simulation laboratory for relatively smart PAC learning: learners, certifiers,
uniformity testers, one-inclusion graphs and exact small-game oracles."""

__version__ = "0.1.0"
