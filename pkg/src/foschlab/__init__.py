"""Numerics for fourth-order Schrodinger equations on periodic grids."""

__version__ = "0.1.0"
