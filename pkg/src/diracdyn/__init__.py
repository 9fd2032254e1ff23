"""Discretized one-dimensional Dirac operators with electromagnetic potentials.

Lattice operators, gauge and boost transformations, windowed
Hilbert-Schmidt resolvent norms, and ballistic transport diagnostics.
"""

__version__ = "0.1.0"
