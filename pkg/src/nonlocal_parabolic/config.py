"""TOML run configuration.

Grammar (all sections optional except ``domain``)::

    T = 0.5                  # final time / chain length
    nt = 16                  # implicit Euler steps
    seed = 0
    starts = 1               # >1 runs multistart
    output_dir = "out"
    snapshot_times = [0.25, 0.5]

    [domain]   dim = 1, extents = [1.0], nodes = [17]
    [potential] name = "abs"  |  s = [...], phi = [...]   (tabulated)
    [u0]       name = "bump", params = {amplitude = 1.0}  |  csv = "u0.csv"
    [f]        same as u0 (source for solve-elliptic)
    [zeta]     same as u0 (coefficient for solve-parabolic)
    [outer]    tol, max_iter, alpha
    [newton]   tol, max_iter, max_halvings, eta_clamp
    [slack]    lemma, energy_atol, max_principle_atol, weak_residual, self_map_rtol, gronwall_atol
    [scalar]   u0 (initial value of the 0-D reduction for ``oracle --mode scalar``)

Unknown keys raise ``ConfigError`` naming the offending key.
"""
import dataclasses
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import tomli
import tomli_w

from .elliptic import EllipticSolveOptions
from .grid import Grid, eigenpairs
from .io import read_field_csv
from .potential import Potential, builtin, tabulated


class ConfigError(ValueError):
    pass


@dataclass
class DomainConfig:
    dim: int = 1
    extents: list[float] = field(default_factory=lambda: [1.0])
    nodes: list[int] = field(default_factory=lambda: [17])


@dataclass
class PotentialConfig:
    name: Optional[str] = None
    s: Optional[list[float]] = None
    phi: Optional[list[float]] = None


@dataclass
class FieldConfig:
    name: Optional[str] = None
    params: dict = field(default_factory=dict)
    csv: Optional[str] = None


@dataclass
class OuterConfig:
    tol: float = 1e-9
    max_iter: int = 500
    alpha: float = 1.0


@dataclass
class NewtonConfig:
    tol: float = 1e-10
    max_iter: int = 50
    max_halvings: int = 30
    eta_clamp: float = 1e12


@dataclass
class SlackConfig:
    lemma: float = 1.05
    energy_atol: float = 1e-10
    max_principle_atol: float = 1e-10
    weak_residual: float = 1e-8
    self_map_rtol: float = 1e-8
    gronwall_atol: float = 1e-14


@dataclass
class ScalarConfig:
    u0: float = 1.0


@dataclass
class RunConfig:
    domain: DomainConfig = field(default_factory=DomainConfig)
    potential: PotentialConfig = field(default_factory=lambda: PotentialConfig(name="abs"))
    u0: FieldConfig = field(default_factory=lambda: FieldConfig(name="zero"))
    f: Optional[FieldConfig] = None
    zeta: Optional[FieldConfig] = None
    T: float = 1.0
    nt: int = 16
    outer: OuterConfig = field(default_factory=OuterConfig)
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    slack: SlackConfig = field(default_factory=SlackConfig)
    scalar: ScalarConfig = field(default_factory=ScalarConfig)
    output_dir: str = "out"
    snapshot_times: list[float] = field(default_factory=list)
    seed: int = 0
    starts: int = 1
    # directory relative paths (CSV inputs) are resolved against; not serialized
    base_dir: str = field(default=".", compare=False, repr=False, metadata={"internal": True})

    # -- parsing ---------------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict, base_dir=".") -> "RunConfig":
        cfg = _build(cls, data, "")
        cfg.base_dir = str(base_dir)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            data = tomli.loads(path.read_text())
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(data, base_dir=path.parent)

    def to_dict(self) -> dict:
        return _emit(self)

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())

    def validate(self) -> None:
        d = self.domain
        if d.dim not in (1, 2) or len(d.extents) != d.dim or len(d.nodes) != d.dim:
            raise ConfigError("domain: dim must be 1 or 2 with matching extents and nodes")
        p = self.potential
        if (p.name is None) == (p.s is None):
            raise ConfigError("potential: give exactly one of 'name' or the table 's'/'phi'")
        if (p.s is None) != (p.phi is None):
            raise ConfigError("potential: table needs both 's' and 'phi'")
        for key in ("u0", "f", "zeta"):
            fc = getattr(self, key)
            if fc is not None and (fc.name is None) == (fc.csv is None):
                raise ConfigError(f"{key}: give exactly one of 'name' or 'csv'")
        if not self.T > 0:
            raise ConfigError("T: must be positive")
        if self.nt < 1:
            raise ConfigError("nt: must be at least 1")
        if not 0 < self.outer.alpha <= 1:
            raise ConfigError("outer.alpha: must lie in (0, 1]")
        if self.starts < 1:
            raise ConfigError("starts: must be at least 1")

    # -- construction of solver inputs -------------------------------------

    def grid(self) -> Grid:
        return Grid(tuple(self.domain.extents), tuple(self.domain.nodes))

    def build_potential(self) -> Potential:
        p = self.potential
        if p.name is not None:
            try:
                return builtin(p.name)
            except KeyError as exc:
                raise ConfigError(f"potential.name: {exc.args[0]}") from None
        return tabulated(p.s, p.phi)

    def build_field(self, key: str, grid: Grid | None = None) -> np.ndarray:
        grid = grid or self.grid()
        fc = getattr(self, key)
        if fc is None:
            return grid.zeros()
        if fc.csv is not None:
            return read_field_csv(Path(self.base_dir) / fc.csv, grid)
        try:
            return builtin_field(grid, fc.name, **fc.params)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"{key}: {exc}") from None

    def elliptic_options(self) -> EllipticSolveOptions:
        n = self.newton
        return EllipticSolveOptions(tol=n.tol, max_iter=n.max_iter, max_halvings=n.max_halvings,
                                    eta_clamp=n.eta_clamp, slack=self.slack.lemma)


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected a table")
    hints = typing.get_type_hints(cls)
    known = {f.name: f for f in dataclasses.fields(cls) if not f.metadata.get("internal")}
    kwargs = {}
    for key, value in data.items():
        where = f"{path}.{key}" if path else key
        if key not in known:
            raise ConfigError(f"unknown key '{where}'")
        kwargs[key] = _coerce(value, hints[key], where)
    return cls(**kwargs)


def _coerce(value, hint, where):
    origin = typing.get_origin(hint)
    if origin is typing.Union:
        (inner,) = [a for a in typing.get_args(hint) if a is not type(None)]
        return _coerce(value, inner, where)
    if dataclasses.is_dataclass(hint):
        return _build(hint, value, where)
    if origin is list:
        (item,) = typing.get_args(hint)
        if not isinstance(value, list):
            raise ConfigError(f"'{where}': expected a list")
        return [_coerce(v, item, f"{where}[{i}]") for i, v in enumerate(value)]
    if hint is dict or origin is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"'{where}': expected a table")
        return dict(value)
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"'{where}': expected a number")
        return float(value)
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"'{where}': expected an integer")
        return value
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"'{where}': expected a string")
        return value
    return value


def _emit(obj):
    out = {}
    for f in dataclasses.fields(obj):
        if f.metadata.get("internal"):
            continue
        value = getattr(obj, f.name)
        if value is None:
            continue
        out[f.name] = _emit(value) if dataclasses.is_dataclass(value) else value
    return out


# -- built-in fields ---------------------------------------------------------

def _field_zero(g):
    return g.zeros()


def _field_constant(g, value=1.0):
    return np.full(g.size, float(value))


def _field_eigenmode(g, k=1, amplitude=1.0):
    return amplitude * eigenpairs(g, int(k))[int(k) - 1][1]


def _field_sine(g, amplitude=1.0):
    """amplitude * prod sin(pi x_i / L_i)."""
    vals = np.ones(g.size)
    for axis, length in enumerate(g.extents):
        vals *= np.sin(np.pi * g.coordinates()[:, axis] / length)
    return amplitude * vals


def _field_bump(g, amplitude=1.0, center=None, width=0.3):
    """Smooth compact bump (1 - r^2)^2_+ scaled so its nodal maximum is ``amplitude``."""
    xs = g.coordinates()
    center = np.asarray([e / 2 for e in g.extents] if center is None else center, dtype=float).reshape(-1)
    r2 = np.sum(((xs - center) / width) ** 2, axis=1)
    prof = np.clip(1.0 - r2, 0.0, None) ** 2
    peak = prof.max()
    if peak == 0.0:
        raise ValueError("bump misses every interior node")
    return amplitude * prof / peak


FIELDS = {
    "zero": _field_zero,
    "constant": _field_constant,
    "eigenmode": _field_eigenmode,
    "sine": _field_sine,
    "bump": _field_bump,
}


def builtin_field(g: Grid, name: str, **params) -> np.ndarray:
    try:
        fn = FIELDS[name]
    except KeyError:
        raise KeyError(f"unknown field {name!r}; choose from {sorted(FIELDS)}") from None
    return fn(g, **params)
