"""Desk-scale numerical laboratory for boundary regularity of degenerate
double-phase parabolic equations: variational capacities, Wiener profiles,
an explicit double-phase solver, and verifiers for every proved inequality.
"""

__version__ = "0.1.0"
