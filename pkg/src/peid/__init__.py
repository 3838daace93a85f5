"""Partial effective information decomposition for discrete and continuous mechanisms."""

__version__ = "0.1.0"
