"""Reference solutions that share nothing with the production solvers except Grid.

``monolithic_solve`` runs Newton on the whole space-time implicit Euler
system with the nonlocal coefficient phi(dt * sum_j u^j); ``scalar_solve``
handles the spatially constant reduction u' + phi(V) u = 0, V = int_0^T u.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import Grid
from .parabolic import Trajectory


class OracleNewtonDivergence(RuntimeError):
    pass


class BracketFailure(RuntimeError):
    pass


def dense_laplacian(g: Grid) -> np.ndarray:
    mats = []
    for n, h in zip(g.interior_shape, g.spacing):
        m = (2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)) / h**2
        mats.append(m)
    if g.dim == 1:
        return mats[0]
    nx, ny = g.interior_shape
    return np.kron(mats[0], np.eye(ny)) + np.kron(np.eye(nx), mats[1])


@dataclass
class MonolithicSystem:
    """Stacked unknowns ``U = [u^1, ..., u^nt]`` of the fully coupled scheme."""

    grid: Grid
    phi: Callable
    dphi: Callable
    u0: np.ndarray
    T: float
    nt: int

    def __post_init__(self):
        self.n = self.grid.size
        self.dt = self.T / self.nt
        self.L = dense_laplacian(self.grid)

    def unstack(self, U):
        return U.reshape(self.nt, self.n)

    def aggregate(self, U) -> np.ndarray:
        return self.dt * self.unstack(U).sum(axis=0)

    def residual(self, U) -> np.ndarray:
        u = self.unstack(U)
        prev = np.vstack([self.u0[None, :], u[:-1]])
        zeta = self.phi(self.aggregate(U))
        r = (u - prev) / self.dt + u @ self.L.T + zeta[None, :] * u
        return r.ravel()

    def jacobian(self, U) -> np.ndarray:
        u = self.unstack(U)
        v = self.aggregate(U)
        zeta, dzeta = self.phi(v), self.dphi(v)
        n, nt, dt = self.n, self.nt, self.dt
        J = np.zeros((nt * n, nt * n))
        diag_block = np.eye(n) / dt + self.L + np.diag(zeta)
        for j in range(nt):
            rows = slice(j * n, (j + 1) * n)
            J[rows, rows] += diag_block
            if j > 0:
                J[rows, (j - 1) * n:j * n] -= np.eye(n) / dt
            # every u^k enters v with weight dt
            coupling = np.diag(dzeta * u[j]) * dt
            for k in range(nt):
                J[rows, k * n:(k + 1) * n] += coupling
        return J

    def residual_norm(self, U) -> float:
        """max over steps of the h-weighted L2 norm of the step residual."""
        r = self.unstack(self.residual(U))
        return float(np.sqrt(self.grid.cell_volume * (r**2).sum(axis=1)).max())


def heat_trajectory_dense(sys: MonolithicSystem) -> np.ndarray:
    step = np.eye(sys.n) + sys.dt * sys.L
    u = sys.u0.copy()
    out = []
    for _ in range(sys.nt):
        u = np.linalg.solve(step, u)
        out.append(u)
    return np.concatenate(out)


def monolithic_solve(grid: Grid, potential, u0, T: float, nt: int, tol: float = 1e-11,
                     max_iter: int = 50) -> Trajectory:
    u0 = grid.check(u0)
    if grid.size * nt > 10_000:
        raise ValueError("monolithic oracle is capped at 10^4 space-time unknowns")
    sys = MonolithicSystem(grid, potential, potential.derivative, u0, T, nt)
    U = heat_trajectory_dense(sys)
    rnorm = sys.residual_norm(U)
    it = 0
    while rnorm > tol:
        if it >= max_iter:
            raise OracleNewtonDivergence(f"monolithic Newton stalled at residual {rnorm:.3e}")
        it += 1
        step = np.linalg.solve(sys.jacobian(U), -sys.residual(U))
        lam = 1.0
        while lam > 1e-9:
            trial = U + lam * step
            tnorm = sys.residual_norm(trial)
            if tnorm < rnorm:
                break
            lam *= 0.5
        else:
            raise OracleNewtonDivergence(f"monolithic Newton line search failed at residual {rnorm:.3e}")
        U, rnorm = trial, tnorm
    states = (u0.copy(),) + tuple(sys.unstack(U).copy())
    return Trajectory(grid, float(T), states)


def _decay_integral(c: float, T: float) -> float:
    """int_0^T exp(-c t) dt, stable for small c."""
    if c == 0.0:
        return T
    return -np.expm1(-c * T) / c


def bisect(fn: Callable[[float], float], lo: float, hi: float, xtol: float = 1e-15, max_iter: int = 200) -> float:
    flo = fn(lo)
    if flo == 0.0:
        return lo
    fhi = fn(hi)
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise BracketFailure(f"no sign change on [{lo}, {hi}]: G = {flo:.3e}, {fhi:.3e}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi) or hi - lo <= xtol * max(1.0, abs(mid)):
            break
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class ScalarSolution:
    V: float
    c: float
    u0: float
    T: float

    def u(self, t):
        return self.u0 * np.exp(-self.c * np.asarray(t, dtype=float))

    @property
    def terminal(self) -> float:
        return float(self.u(self.T))


def scalar_G(phi, u0: float, T: float) -> Callable[[float], float]:
    return lambda V: V - u0 * _decay_integral(float(phi(V)), T)


def scalar_solve(phi, u0: float, T: float, grow: int = 60) -> ScalarSolution:
    """Solve V = u0 (1 - exp(-phi(V) T)) / phi(V) by bisection."""
    if not T > 0:
        raise ValueError("T must be positive")
    u0 = float(u0)
    if u0 == 0.0:
        return ScalarSolution(0.0, float(phi(0.0)), 0.0, T)
    G = scalar_G(phi, u0, T)
    lo, hi = sorted((0.0, u0 * T))
    for _ in range(grow):
        if np.sign(G(lo)) != np.sign(G(hi)) or G(lo) == 0.0 or G(hi) == 0.0:
            break
        width = hi - lo
        lo, hi = lo - width, hi + width
    else:
        samples = {x: G(x) for x in np.linspace(lo, hi, 5)}
        raise BracketFailure(f"could not bracket the root; G samples {samples}")
    V = bisect(G, lo, hi)
    return ScalarSolution(V, float(phi(V)), u0, T)


def scalar_psi(phi, u0: float, T: float) -> Callable[[float], float]:
    """The 0-D terminal map w -> u0 exp(-phi(V) T) with eta(V) = u0 - w.

    Without diffusion, w = u0 gives V = 0 and is a spurious, repelling fixed
    point of this map; iterate from a start other than u0.
    """

    def eta_inverse(target: float) -> float:
        if target == 0.0:
            return 0.0
        # eta(s) = phi(s) s is non-decreasing and |eta(s)| grows at least like it does
        hi = 1.0
        while abs(phi(np.sign(target) * hi) * hi) < abs(target):
            hi *= 2.0
            if hi > 1e12:
                raise BracketFailure("eta does not reach the target value")
        s = bisect(lambda x: phi(x) * x - target, *sorted((0.0, np.sign(target) * hi)))
        return s

    def mapping(w):
        V = eta_inverse(u0 - float(w))
        return u0 * np.exp(-float(phi(V)) * T)

    return mapping
