"""Solver and verification tools for u_t - Lap u + phi(int_0^T u dt) u = 0 with zero Dirichlet data."""
from .grid import Grid, eigenpairs, inner, laplacian_apply, norm_h1_semi, norm_inf, norm_l2
from .potential import Potential, builtin, validate_assumption
from .elliptic import EllipticSolveOptions, solve_V
from .parabolic import Trajectory, solve_U, terminal
from .fixedpoint import ProblemSpec, Solution, certify_uniqueness, multistart, psi, solve

__all__ = [
    "Grid", "eigenpairs", "inner", "laplacian_apply", "norm_h1_semi", "norm_inf", "norm_l2",
    "Potential", "builtin", "validate_assumption",
    "EllipticSolveOptions", "solve_V",
    "Trajectory", "solve_U", "terminal",
    "ProblemSpec", "Solution", "certify_uniqueness", "multistart", "psi", "solve",
]
