"""Damped Newton solver for -Lap v + phi(v) v + f = 0 with v = 0 on the boundary.

The Newton matrix -Lap_h + diag(eta'(v)) is SPD whenever eta is
non-decreasing, so every linear step is a conjugate-gradient solve.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg

from .grid import Grid, norm_h1_semi, norm_l2
from .potential import Potential, PotentialDomainError, sample_points

log = logging.getLogger(__name__)


class NewtonDivergence(RuntimeError):
    pass


class LinearSolveFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class EllipticSolveOptions:
    tol: float = 1e-10
    max_iter: int = 50
    max_halvings: int = 30
    eta_clamp: float = 1e12
    cg_rtol: float = 1e-13
    slack: float = 1.05

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class BoundCheck:
    lhs: float
    rhs: float
    slack: float = 1.05

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs * self.slack

    @property
    def margin(self) -> float:
        """rhs / lhs; infinite when lhs vanishes."""
        return self.rhs / self.lhs if self.lhs > 0 else float("inf")

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "slack": self.slack, "margin": self.margin, "pass": self.passed}


@dataclass
class EllipticReport:
    iterations: int
    residual: float
    residual_history: list[float] = field(default_factory=list)
    bounds: dict[str, BoundCheck] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(b.passed for b in self.bounds.values())

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "residual": self.residual,
            "residual_history": list(self.residual_history),
            "bounds": {k: b.to_dict() for k, b in self.bounds.items()},
            "pass": self.passed,
        }


def spd_solve(A, b: np.ndarray, rtol: float, x0=None) -> np.ndarray:
    """Conjugate gradients to ``rtol`` relative residual, verified afterwards."""
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b)
    n = b.size
    diag = A.diagonal()
    precond = sp.diags(1.0 / diag)
    x, info = cg(A, b, x0=x0, rtol=rtol, atol=0.0, maxiter=20 * n + 100, M=precond)
    res = np.linalg.norm(b - A @ x) / bnorm
    # CG may stall a hair above rtol from rounding; accept within a factor 100
    if info != 0 and res > 100 * rtol:
        raise LinearSolveFailure(f"CG did not converge: relative residual {res:.3e} (info={info})")
    return x


def _clamped_eta(p: Potential, v: np.ndarray, clamp: float) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        eta = p.eta(v)
    eta = np.where(np.isnan(eta), np.sign(v) * clamp, eta)
    return np.clip(eta, -clamp, clamp)


def residual(g: Grid, p: Potential, f: np.ndarray, v: np.ndarray, clamp: float = np.inf) -> np.ndarray:
    """Nodal residual -Lap_h v + eta(v) + f."""
    return g.laplacian @ v + _clamped_eta(p, v, clamp) + f


def solve_V(g: Grid, p: Potential, f, opts: EllipticSolveOptions | None = None, v0=None):
    """Solve the semilinear elliptic problem for ``v`` given source ``f``.

    Returns ``(v, report)``. Raises ``NewtonDivergence`` if backtracking
    cannot reduce the residual and ``PotentialDomainError`` if an iterate
    leaves the potential's validity interval.
    """
    opts = opts or EllipticSolveOptions()
    f = g.check(f)
    if not np.all(np.isfinite(f)):
        raise ValueError("source field has non-finite values")
    v = g.zeros() if v0 is None else g.check(v0).copy()
    A = g.laplacian

    r = residual(g, p, f, v, opts.eta_clamp)
    rnorm = norm_l2(g, r)
    history = [rnorm]
    it = 0
    hit_domain = False
    while rnorm > opts.tol:
        if it >= opts.max_iter:
            if hit_domain:
                raise PotentialDomainError(f"{p.name}: Newton steps keep leaving the validity interval")
            raise NewtonDivergence(f"no convergence in {opts.max_iter} Newton iterations (residual {rnorm:.3e})")
        it += 1
        with np.errstate(over="ignore", invalid="ignore"):
            jac_diag = p.eta_prime(v)
        jac_diag = np.clip(np.nan_to_num(jac_diag, nan=opts.eta_clamp), 0.0, opts.eta_clamp)
        J = (A + sp.diags(jac_diag)).tocsr()
        step = spd_solve(J, -r, opts.cg_rtol)

        lam = 1.0
        hit_domain = False
        accepted = False
        for _ in range(opts.max_halvings + 1):
            trial = v + lam * step
            try:
                r_trial = residual(g, p, f, trial, opts.eta_clamp)
            except PotentialDomainError:
                hit_domain = True
            else:
                trial_norm = norm_l2(g, r_trial)
                if trial_norm < rnorm:
                    accepted = True
                    break
            lam *= 0.5
        if not accepted:
            # a residual already at rounding level cannot be reduced further
            if rnorm <= 10 * opts.tol:
                break
            if hit_domain:
                raise PotentialDomainError(f"{p.name}: Newton iterate left the validity interval")
            raise NewtonDivergence(f"residual not reduced after {opts.max_halvings} halvings (residual {rnorm:.3e})")
        v, r, rnorm = trial, r_trial, trial_norm
        history.append(rnorm)
        log.debug("newton %d: residual %.3e step %.3g", it, rnorm, lam)

    if np.any(np.abs(p.eta(v)) >= opts.eta_clamp):
        raise NewtonDivergence("converged solution touches the eta clamp")
    report = EllipticReport(iterations=it, residual=rnorm, residual_history=history)
    report.bounds = check_lemma31(g, p, f, v, opts.slack)
    return v, report


def phi_sq_bound_on_unit_interval(p: Potential, samples: int = 10_001) -> float:
    """max of phi(s)^2 for |s| <= 1 by sampling."""
    s = sample_points(-1.0, 1.0, samples)
    return float(np.max(p(s) ** 2))


def check_lemma31(g: Grid, p: Potential, f, v, slack: float = 1.05) -> dict[str, BoundCheck]:
    """Gradient, eta and phi bounds for a solution ``v`` of the elliptic problem.

    - ``gradient``: ||grad v|| <= diam * ||f||
    - ``eta``: ||phi(v) v|| <= ||f||
    - ``phi``: ||phi(v)|| <= sqrt(||f||^2 + gamma * |Omega|), gamma = max phi^2 on [-1, 1]
    """
    f, v = g.check(f), g.check(v)
    fn = norm_l2(g, f)
    gamma = phi_sq_bound_on_unit_interval(p)
    return {
        "gradient": BoundCheck(norm_h1_semi(g, v), g.diameter() * fn, slack),
        "eta": BoundCheck(norm_l2(g, p.eta(v)), fn, slack),
        "phi": BoundCheck(norm_l2(g, p(v)), float(np.sqrt(fn**2 + gamma * g.volume)), slack),
    }


def check_lemma32_lipschitz(g: Grid, p: Potential, f1, f2, slack: float = 1.05, opts=None) -> BoundCheck:
    """||grad(V(f1) - V(f2))|| <= diam * ||f1 - f2||."""
    v1, _ = solve_V(g, p, f1, opts)
    v2, _ = solve_V(g, p, f2, opts)
    return BoundCheck(norm_h1_semi(g, v1 - v2), g.diameter() * norm_l2(g, g.check(f1) - g.check(f2)), slack)
