"""Tabular offline RL laboratory: behavioral cloning versus pessimistic offline RL."""

__version__ = "0.1.0"
