"""Sparsity-adapted complex moment relaxations for polynomial optimization
over complex variables, with an AC optimal power flow front end."""

from .poly import CPOP, Poly, ball_constraint, monomial_basis
from .relax import RelaxOptions, assemble, complex_to_real
from .solver import SolverSettings, solve

__all__ = [
    "CPOP",
    "Poly",
    "ball_constraint",
    "monomial_basis",
    "RelaxOptions",
    "assemble",
    "complex_to_real",
    "SolverSettings",
    "solve",
]

__version__ = "0.1.0"
