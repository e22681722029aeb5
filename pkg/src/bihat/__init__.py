"""Numerical laboratory for bilinear potential operators and Leibniz-type rules on the torus."""

from .grid import Ball, GridFunction, PeriodicGrid, SpectralFunction

__version__ = "0.1.0"

__all__ = ["Ball", "GridFunction", "PeriodicGrid", "SpectralFunction", "__version__"]
