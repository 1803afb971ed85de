"""Coarse-to-fine detection and rule-based tracking of small fast balls in fixed-camera video."""

__version__ = "0.1.0"
