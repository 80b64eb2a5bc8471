"""Implicit Euler for u_t - Lap u + zeta u = 0 with a time-independent zeta >= 0."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .elliptic import LinearSolveFailure, spd_solve  # noqa: F401  (re-exported)
from .grid import Grid, norm_h1_semi, norm_inf, norm_l2


class NegativeZeta(ValueError):
    pass


@dataclass(frozen=True)
class Trajectory:
    grid: Grid
    T: float
    states: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.states) < 2:
            raise ValueError("a trajectory needs at least one time step")
        for u in self.states:
            self.grid.check(u)

    @property
    def nt(self) -> int:
        return len(self.states) - 1

    @property
    def dt(self) -> float:
        return self.T / self.nt

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.nt + 1) * self.dt

    def as_array(self) -> np.ndarray:
        return np.stack(self.states)

    def nearest_index(self, t: float) -> int:
        return int(np.clip(round(t / self.dt), 0, self.nt))


@dataclass
class StepCheck:
    lhs: float
    rhs: float
    atol: float

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs + self.atol


@dataclass
class ParabolicReport:
    energy: list[StepCheck] = field(default_factory=list)
    max_principle: StepCheck | None = None

    @property
    def energy_passed(self) -> bool:
        return all(c.passed for c in self.energy)

    @property
    def passed(self) -> bool:
        return self.energy_passed and (self.max_principle is None or self.max_principle.passed)

    def to_dict(self) -> dict:
        worst = max((c.lhs - c.rhs for c in self.energy), default=0.0)
        mp = self.max_principle
        return {
            "energy": {"steps": len(self.energy), "max_violation": worst, "pass": self.energy_passed},
            "max_principle": None if mp is None else {"lhs": mp.lhs, "rhs": mp.rhs, "pass": mp.passed},
            "pass": self.passed,
        }


def solve_U(g: Grid, zeta, u0, T: float, nt: int, cg_rtol: float = 1e-13):
    """Implicit Euler trajectory ``(I + dt(-Lap_h + diag zeta)) u^{j+1} = u^j``."""
    zeta, u0 = g.check(zeta), g.check(u0)
    if np.any(zeta < 0):
        raise NegativeZeta(f"zeta must be non-negative (min {zeta.min():.3e})")
    if not T > 0:
        raise ValueError(f"final time must be positive, got {T}")
    if nt < 1:
        raise ValueError("need at least one time step")
    dt = T / nt
    A = (sp.identity(g.size) + dt * (g.laplacian + sp.diags(zeta))).tocsr()
    states = [u0.copy()]
    u = u0.copy()
    for _ in range(nt):
        u = spd_solve(A, u, cg_rtol, x0=u)
        states.append(u)
    traj = Trajectory(g, float(T), tuple(states))
    report = ParabolicReport(energy=check_energy_estimate(traj, zeta), max_principle=check_max_principle(traj))
    return traj, report


def terminal(traj: Trajectory) -> np.ndarray:
    return traj.states[-1]


def check_energy_estimate(traj: Trajectory, zeta, atol: float = 1e-10) -> list[StepCheck]:
    """0.5||u^j||^2 + sum_{m=1..j} dt (||grad u^m||^2 + ||u^m||_zeta^2) <= 0.5||u^0||^2 for every j."""
    g = traj.grid
    zeta = g.check(zeta)
    rhs = 0.5 * norm_l2(g, traj.states[0]) ** 2
    out = [StepCheck(rhs, rhs, atol)]
    dissipated = 0.0
    for u in traj.states[1:]:
        dissipated += traj.dt * (norm_h1_semi(g, u) ** 2 + g.cell_volume * float(np.dot(zeta * u, u)))
        out.append(StepCheck(0.5 * norm_l2(g, u) ** 2 + dissipated, rhs, atol))
    return out


def check_max_principle(traj: Trajectory, atol: float = 1e-10) -> StepCheck:
    g = traj.grid
    return StepCheck(max(norm_inf(g, u) for u in traj.states), norm_inf(g, traj.states[0]), atol)
