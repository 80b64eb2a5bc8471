"""Outer fixed-point iteration on the terminal value u(., T).

For a candidate terminal value ``w`` the map

    w -> v = V(w - u0) -> zeta = phi(v) -> U_T(zeta)

integrates the equation in time (elliptic solve for the time integral
``v``), freezes the coefficient, and runs the linear parabolic solve. A
fixed point ``w*`` gives the solution ``u = U(phi(V(w* - u0)))``.
"""
from __future__ import annotations

import itertools
import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .elliptic import EllipticReport, EllipticSolveOptions, solve_V
from .grid import Grid, norm_inf, norm_l2, laplacian_apply
from .parabolic import ParabolicReport, Trajectory, solve_U, terminal
from .potential import Potential, max_abs_derivative

log = logging.getLogger(__name__)


class OuterNonConvergence(RuntimeError):
    """Raised when the outer iteration exhausts its budget; carries the history."""

    def __init__(self, message, w=None, history=None):
        super().__init__(message)
        self.w = w
        self.history = history or []


@dataclass(frozen=True)
class ProblemSpec:
    grid: Grid
    potential: Potential
    u0: np.ndarray
    T: float
    nt: int
    tol: float = 1e-9
    max_iter: int = 500
    alpha: float = 1.0
    elliptic: EllipticSolveOptions = field(default_factory=EllipticSolveOptions)

    def __post_init__(self):
        object.__setattr__(self, "u0", self.grid.check(self.u0).copy())
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if self.nt < 1:
            raise ValueError("nt must be at least 1")
        if not self.tol > 0:
            raise ValueError("outer tolerance must be positive")
        if not 0 < self.alpha <= 1:
            raise ValueError(f"damping alpha must lie in (0, 1], got {self.alpha}")
        if not np.all(np.isfinite(self.u0)):
            raise ValueError("u0 has non-finite values")

    @property
    def dt(self) -> float:
        return self.T / self.nt

    @property
    def radius(self) -> float:
        """Radius ||u0|| of the ball the map sends into itself."""
        return norm_l2(self.grid, self.u0)


@dataclass
class UniquenessCertificate:
    K: float
    M: float
    T: float

    @property
    def product(self) -> float:
        return self.M * self.K * self.T**2

    @property
    def certified(self) -> bool:
        return self.product < 2.0

    def to_dict(self) -> dict:
        return {"K": self.K, "M": self.M, "T": self.T, "MKT2": self.product, "certified": self.certified}


@dataclass
class Solution:
    spec: ProblemSpec
    trajectory: Trajectory
    v: np.ndarray
    w_star: np.ndarray
    zeta: np.ndarray
    history: list[float]
    elliptic_report: EllipticReport
    parabolic_report: ParabolicReport
    start: np.ndarray | None = None

    @property
    def iterations(self) -> int:
        return len(self.history)

    def contraction_ratio(self, skip: int = 3, floor: float | None = None) -> float | None:
        """Largest ratio of successive update norms after the first ``skip`` iterations.

        Updates at or below ``floor`` (default: the outer tolerance) are at
        rounding level and excluded. ``None`` when fewer than two qualify.
        """
        floor = self.spec.tol if floor is None else floor
        h = self.history
        ratios = [h[k] / h[k - 1] for k in range(max(1, skip), len(h)) if h[k - 1] > floor and h[k] > floor]
        if not ratios:
            # too few iterations beyond skip; fall back to all usable ratios
            ratios = [h[k] / h[k - 1] for k in range(1, len(h)) if h[k - 1] > floor and h[k] > floor]
        return max(ratios) if ratios else None


def damped_picard(mapping: Callable, w0, tol: float, max_iter: int, alpha: float = 1.0, norm=None):
    """Iterate ``w <- (1 - alpha) w + alpha * mapping(w)`` until the update is below ``tol``.

    Returns ``(w, history)`` where ``history[k]`` is the norm of the k-th
    update; raises ``OuterNonConvergence`` after ``max_iter`` updates.
    """
    norm = norm or (lambda x: float(np.linalg.norm(x)))
    w = w0
    history = []
    for k in range(max_iter):
        w_next = (1.0 - alpha) * w + alpha * mapping(w)
        step = norm(w_next - w)
        history.append(step)
        w = w_next
        log.debug("picard %d: |dw| = %.3e", k + 1, step)
        if step <= tol:
            return w, history
    raise OuterNonConvergence(f"no convergence in {max_iter} outer iterations (last update {history[-1]:.3e})", w, history)


def psi(spec: ProblemSpec, w) -> np.ndarray:
    g = spec.grid
    w = g.check(w)
    if norm_l2(g, w) > spec.radius * (1 + 1e-8):
        warnings.warn("psi evaluated outside the invariant ball ||w|| <= ||u0||", RuntimeWarning, stacklevel=2)
    v, _ = solve_V(g, spec.potential, w - spec.u0, spec.elliptic)
    traj, _ = solve_U(g, spec.potential(v), spec.u0, spec.T, spec.nt)
    return terminal(traj)


def heat_terminal(spec: ProblemSpec) -> np.ndarray:
    traj, _ = solve_U(spec.grid, spec.grid.zeros(), spec.u0, spec.T, spec.nt)
    return terminal(traj)


def solve(spec: ProblemSpec, w0=None) -> Solution:
    """Solve the nonlocal problem by damped Picard iteration on the terminal value.

    Starts from the pure heat-equation terminal value unless ``w0`` is given.
    """
    g = spec.grid
    start = heat_terminal(spec) if w0 is None else g.check(w0).copy()
    w, history = damped_picard(
        lambda x: psi(spec, x), start, spec.tol, spec.max_iter, spec.alpha, norm=lambda x: norm_l2(g, x)
    )
    v, ell = solve_V(g, spec.potential, w - spec.u0, spec.elliptic)
    zeta = spec.potential(v)
    traj, par = solve_U(g, zeta, spec.u0, spec.T, spec.nt)
    return Solution(spec, traj, v, w, zeta, history, ell, par, start=None if w0 is None else start)


def residual_weak_form(sol: Solution) -> float:
    """max_j ||(u^{j+1} - u^j)/dt - Lap_h u^{j+1} + zeta u^{j+1}|| over all steps."""
    g, traj = sol.spec.grid, sol.trajectory
    worst = 0.0
    for prev, cur in zip(traj.states[:-1], traj.states[1:]):
        r = (cur - prev) / traj.dt + laplacian_apply(g, cur) + sol.zeta * cur
        worst = max(worst, norm_l2(g, r))
    return worst


def time_integral(traj: Trajectory) -> np.ndarray:
    """Right-endpoint rectangle rule, the quadrature implied by implicit Euler."""
    return traj.dt * np.sum(traj.as_array()[1:], axis=0)


def aggregate_consistency(sol: Solution) -> dict:
    """Distance between ``v`` and the time integral of the trajectory.

    ``constant`` is the distance divided by ``(h + dt) * ||u0||``.
    """
    g = sol.spec.grid
    dist = norm_l2(g, sol.v - time_integral(sol.trajectory))
    scale = (max(g.spacing) + sol.trajectory.dt) * sol.spec.radius
    return {"distance": dist, "constant": dist / scale if scale > 0 else 0.0}


def psi_self_map_check(sol: Solution, rtol: float = 1e-8) -> dict:
    lhs = norm_l2(sol.spec.grid, sol.w_star)
    rhs = sol.spec.radius
    return {"lhs": lhs, "rhs": rhs, "pass": lhs <= rhs * (1 + rtol)}


def certify_uniqueness(spec: ProblemSpec, samples: int = 10_001) -> UniquenessCertificate:
    """K = max|u0|, M = max |phi'| on [-KT, KT]; unique when M K T^2 < 2."""
    K = norm_inf(spec.grid, spec.u0)
    M = max_abs_derivative(spec.potential, K * spec.T, samples)
    return UniquenessCertificate(K=K, M=M, T=spec.T)


def random_start(spec: ProblemSpec, rng: np.random.Generator) -> np.ndarray:
    """Random field in the ball ||w|| <= ||u0||."""
    g = spec.grid
    direction = rng.standard_normal(g.size)
    n = norm_l2(g, direction)
    return direction / n * spec.radius * rng.uniform() if n > 0 else g.zeros()


@dataclass
class MultistartResult:
    starts: list[np.ndarray]
    solutions: list[Solution | None]
    errors: list[str | None]

    @property
    def converged(self) -> list[Solution]:
        return [s for s in self.solutions if s is not None]

    @property
    def dispersion(self) -> float:
        """Largest pairwise L2 distance between converged terminal values."""
        sols = self.converged
        if not sols:
            return float("nan")
        g = sols[0].spec.grid
        return max((norm_l2(g, a.w_star - b.w_star) for a, b in itertools.combinations(sols, 2)), default=0.0)


def multistart(spec: ProblemSpec, starts: int = 5, seed: int = 0, workers: int | None = None) -> MultistartResult:
    if starts < 2:
        raise ValueError("multistart needs at least two starts")
    rng = np.random.default_rng(seed)
    inits = [random_start(spec, rng) for _ in range(starts)]

    def run(w0):
        try:
            return solve(spec, w0), None
        except OuterNonConvergence as exc:
            return None, str(exc)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, inits))
    else:
        results = [run(w0) for w0 in inits]
    return MultistartResult(inits, [r[0] for r in results], [r[1] for r in results])


@dataclass
class GronwallCheck:
    lhs: np.ndarray
    rhs: np.ndarray
    atol: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.lhs <= self.rhs + self.atol))

    def to_dict(self) -> dict:
        return {"max_lhs": float(self.lhs.max()), "max_rhs": float(self.rhs.max()),
                "max_excess": float(np.max(self.lhs - self.rhs)), "atol": self.atol, "pass": self.passed}


def check_gronwall_51(sol1: Solution, sol2: Solution, cert: UniquenessCertificate | None = None,
                      atol: float = 1e-14) -> GronwallCheck:
    """Check ||u(t)||^2 <= 2 M K (int_0^T ||u||)(int_0^t ||u||) for u = u1 - u2.

    In the certified regime any nonzero difference violates this, so the
    check can only hold up to ``atol``, the squared noise level of two
    numerically converged solutions.
    """
    s1, s2 = sol1.spec, sol2.spec
    if s1.grid != s2.grid or s1.T != s2.T or s1.nt != s2.nt or not np.array_equal(s1.u0, s2.u0) \
            or s1.potential.name != s2.potential.name:
        raise ValueError("solutions belong to different problems")
    cert = cert or certify_uniqueness(s1)
    g, traj = s1.grid, sol1.trajectory
    diff = sol1.trajectory.as_array() - sol2.trajectory.as_array()
    norms = np.array([norm_l2(g, d) for d in diff])
    t = traj.times
    running = np.concatenate([[0.0], np.cumsum(0.5 * (norms[1:] + norms[:-1]) * np.diff(t))])
    rhs = 2.0 * cert.M * cert.K * running[-1] * running
    return GronwallCheck(norms**2, rhs, atol)


def psi_lipschitz_estimate(spec: ProblemSpec, w, samples: int = 5, radius: float = 1e-3, seed: int = 0) -> float:
    """Sampled estimate of the Lipschitz constant of psi near ``w``."""
    g = spec.grid
    rng = np.random.default_rng(seed)
    base = psi(spec, w)
    worst = 0.0
    for _ in range(samples):
        d = rng.standard_normal(g.size)
        d *= radius / norm_l2(g, d)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            worst = max(worst, norm_l2(g, psi(spec, w + d) - base) / radius)
    return worst
