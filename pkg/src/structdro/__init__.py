"""Distributionally robust optimization over structured optimal-transport ambiguity sets."""

__version__ = "0.1.0"
