"""Cubical persistent homology features and a TDA-checked HARQ image link simulator."""

__version__ = "0.1.0"
