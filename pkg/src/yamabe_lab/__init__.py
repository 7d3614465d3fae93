"""Numerical experiments with the Yamabe functional on squeezed sphere products."""

__version__ = "0.1.0"
