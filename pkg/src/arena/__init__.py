"""Deterministic 16-team survival arena with scripted baselines, scoring and ratings."""

__version__ = "0.1.0"
