"""Rotational dynamics and reconstruction phases of self-deforming bodies."""

__version__ = "0.1.0"
