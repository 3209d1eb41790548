"""Iconary: a turn-based icon drawing and guessing game platform."""

__version__ = "0.1.0"
