"""Numerical workbench for twistor generalized Kähler structures over affine surfaces."""

__version__ = "0.3.0"
