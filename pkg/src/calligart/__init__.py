"""Calligraphy-conditioned generative artwork pipeline."""

__version__ = "0.1.0"
