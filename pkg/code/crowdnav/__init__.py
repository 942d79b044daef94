"""Crowd-Navigation-Benchmark: Simulation, Kruemmungsmetrik und Bewertung."""

__version__ = "0.1.0"
