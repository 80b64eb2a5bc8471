"""Interaction potentials phi and the monotone nonlinearity eta(s) = phi(s) * s.

A potential must be non-negative, vanish at zero, and make eta
non-decreasing with a locally bounded derivative. ``validate_assumption``
checks these properties by dense sampling since potentials are treated as
black boxes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class PotentialDomainError(ValueError):
    """Argument outside the declared validity interval of a potential."""


class NonFiniteValue(ArithmeticError):
    pass


@dataclass(frozen=True)
class Potential:
    name: str
    phi: Callable[[np.ndarray], np.ndarray]
    dphi: Callable[[np.ndarray], np.ndarray]
    interval: tuple[float, float] = (-np.inf, np.inf)
    # places where phi is only one-sided differentiable
    kinks: tuple[float, ...] = field(default=())

    def _arg(self, s):
        s = np.asarray(s, dtype=float)
        lo, hi = self.interval
        if np.any(s < lo) or np.any(s > hi):
            raise PotentialDomainError(f"{self.name}: argument outside validity interval [{lo}, {hi}]")
        return s

    def __call__(self, s):
        return self.phi(self._arg(s))

    def derivative(self, s):
        return self.dphi(self._arg(s))

    def eta(self, s):
        s = self._arg(s)
        return self.phi(s) * s

    def eta_prime(self, s):
        s = self._arg(s)
        return self.dphi(s) * s + self.phi(s)


def eval_phi(p: Potential, s):
    return p(s)


def eval_eta(p: Potential, s):
    return p.eta(s)


def eval_eta_prime(p: Potential, s):
    return p.eta_prime(s)


# one-sided derivative of |s| taken from the right at 0
def _sign(s):
    return np.where(s < 0, -1.0, 1.0)


def _sech(r):
    e = np.exp(-r)
    return 2.0 * e / (1.0 + e * e)


def _hyperbolic_phi(s):
    r = np.abs(s)
    return 2.0 * r * _sech(r) + np.tanh(r)


def _hyperbolic_dphi(s):
    r = np.abs(s)
    sech = _sech(r)
    return _sign(s) * (2.0 * sech - 2.0 * r * np.tanh(r) * sech + sech**2)


BUILTINS: dict[str, Potential] = {
    "zero": Potential("zero", lambda s: np.zeros_like(s), lambda s: np.zeros_like(s)),
    "abs": Potential("abs", np.abs, _sign, kinks=(0.0,)),
    "square": Potential("square", np.square, lambda s: 2.0 * s),
    # (2|s| + sinh|s|) / cosh|s|, written with sech to avoid overflow
    "hyperbolic": Potential("hyperbolic", _hyperbolic_phi, _hyperbolic_dphi, kinks=(0.0,)),
    "sine": Potential(
        "sine",
        lambda s: 2.0 * np.abs(s) + 3.0 * np.sin(np.abs(s)),
        lambda s: _sign(s) * (2.0 + 3.0 * np.cos(s)),
        kinks=(0.0,),
    ),
}


def builtin(name: str) -> Potential:
    try:
        return BUILTINS[name]
    except KeyError:
        raise KeyError(f"unknown potential {name!r}; choose from {sorted(BUILTINS)}") from None


def tabulated(s_values, phi_values, name: str = "table") -> Potential:
    """Piecewise-linear potential through the given points.

    The validity interval is the table range; the derivative is the slope of
    the segment to the right of ``s`` (left segment at the upper end).
    """
    s_values = np.asarray(s_values, dtype=float)
    phi_values = np.asarray(phi_values, dtype=float)
    if s_values.ndim != 1 or s_values.shape != phi_values.shape or s_values.size < 2:
        raise ValueError("table needs matching 1-D arrays of at least two points")
    if np.any(np.diff(s_values) <= 0):
        raise ValueError("table abscissae must be strictly increasing")
    slopes = np.diff(phi_values) / np.diff(s_values)

    def dphi(s):
        idx = np.clip(np.searchsorted(s_values, s, side="right") - 1, 0, slopes.size - 1)
        return slopes[idx]

    return Potential(
        name,
        lambda s: np.interp(s, s_values, phi_values),
        dphi,
        interval=(float(s_values[0]), float(s_values[-1])),
        kinks=tuple(float(x) for x in s_values[1:-1]),
    )


@dataclass
class ValidationReport:
    name: str
    interval: tuple[float, float]
    samples: int
    phi_at_zero: float | None
    min_phi: float
    min_eta_prime: float
    max_abs_eta_prime: float
    max_abs_dphi: float
    phi_nonnegative: bool
    eta_nondecreasing: bool
    vanishes_at_zero: bool

    @property
    def passed(self) -> bool:
        return self.phi_nonnegative and self.eta_nondecreasing and self.vanishes_at_zero

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "interval": list(self.interval),
            "samples": self.samples,
            "phi_at_zero": self.phi_at_zero,
            "min_phi": self.min_phi,
            "min_eta_prime": self.min_eta_prime,
            "max_abs_eta_prime": self.max_abs_eta_prime,
            "max_abs_dphi": self.max_abs_dphi,
            "phi_nonnegative": self.phi_nonnegative,
            "eta_nondecreasing": self.eta_nondecreasing,
            "vanishes_at_zero": self.vanishes_at_zero,
            "passed": self.passed,
        }


def sample_points(a: float, b: float, samples: int) -> np.ndarray:
    """Uniform samples on [a, b], with 0 and the endpoints added when inside."""
    s = np.linspace(a, b, samples)
    if a < 0.0 < b:
        s = np.union1d(s, [0.0])
    return s


def validate_assumption(p: Potential, interval=(-50.0, 50.0), samples: int = 100_000) -> ValidationReport:
    a, b = map(float, interval)
    if not a < b:
        raise ValueError(f"empty interval [{a}, {b}]")
    if samples < 2:
        raise ValueError("need at least two samples")
    s = sample_points(a, b, samples)
    phi = p(s)
    dphi = p.derivative(s)
    eta_prime = p.eta_prime(s)
    for label, arr in (("phi", phi), ("phi'", dphi), ("eta'", eta_prime)):
        if not np.all(np.isfinite(arr)):
            raise NonFiniteValue(f"{p.name}: {label} is not finite on [{a}, {b}]")
    phi0 = float(p(0.0)) if a <= 0.0 <= b else None
    return ValidationReport(
        name=p.name,
        interval=(a, b),
        samples=int(s.size),
        phi_at_zero=phi0,
        min_phi=float(phi.min()),
        min_eta_prime=float(eta_prime.min()),
        max_abs_eta_prime=float(np.abs(eta_prime).max()),
        max_abs_dphi=float(np.abs(dphi).max()),
        phi_nonnegative=bool(np.all(phi >= 0.0)),
        eta_nondecreasing=bool(np.all(eta_prime >= 0.0)),
        vanishes_at_zero=phi0 is None or phi0 == 0.0,
    )


def max_abs_derivative(p: Potential, bound: float, samples: int = 10_001) -> float:
    """max |phi'(s)| over [-bound, bound] by grid scan (0 always sampled)."""
    bound = abs(float(bound))
    if bound == 0.0:
        return float(abs(p.derivative(0.0)))
    s = sample_points(-bound, bound, samples)
    d = p.derivative(s)
    if not np.all(np.isfinite(d)):
        raise NonFiniteValue(f"{p.name}: phi' is not finite on [{-bound}, {bound}]")
    return float(np.abs(d).max())
