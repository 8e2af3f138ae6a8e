"""Parametrically pumped Kerr magnon modes: cat states, modular projection and CHSH tests."""

__version__ = "0.1.0"
