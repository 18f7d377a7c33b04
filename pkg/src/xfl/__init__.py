"""Design and simulation toolkit for mmWave P3F acoustic ladder filters."""

__version__ = "0.1.0"
