"""Uniform finite-difference grids on intervals and rectangles.

Fields are plain 1-D numpy arrays holding one value per interior node
(C order for 2-D grids). Boundary values are implicitly zero.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


class GridMismatch(ValueError):
    """A field does not live on the grid it was passed with."""


@dataclass(frozen=True)
class Grid:
    extents: tuple[float, ...]
    nodes: tuple[int, ...]

    def __post_init__(self):
        extents = tuple(float(e) for e in self.extents)
        nodes = tuple(int(n) for n in self.nodes)
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "nodes", nodes)
        if len(extents) not in (1, 2) or len(extents) != len(nodes):
            raise ValueError("grid must be 1-D or 2-D with one extent and node count per axis")
        if any(e <= 0 or not np.isfinite(e) for e in extents):
            raise ValueError(f"extents must be positive, got {extents}")
        if any(n < 3 for n in nodes):
            raise ValueError(f"need at least 3 nodes per axis, got {nodes}")

    @classmethod
    def interval(cls, length: float = 1.0, nodes: int = 17) -> "Grid":
        return cls((length,), (nodes,))

    @classmethod
    def rectangle(cls, lx: float, ly: float, nx: int, ny: int) -> "Grid":
        return cls((lx, ly), (nx, ny))

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(e / (n - 1) for e, n in zip(self.extents, self.nodes))

    @property
    def interior_shape(self) -> tuple[int, ...]:
        return tuple(n - 2 for n in self.nodes)

    @property
    def size(self) -> int:
        return int(np.prod(self.interior_shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod(self.extents))

    def diameter(self) -> float:
        return float(np.hypot.reduce(self.extents)) if self.dim > 1 else self.extents[0]

    def axes(self, interior: bool = True) -> list[np.ndarray]:
        out = []
        for e, n in zip(self.extents, self.nodes):
            x = np.linspace(0.0, e, n)
            out.append(x[1:-1] if interior else x)
        return out

    def coordinates(self) -> np.ndarray:
        """Interior node coordinates, shape (size, dim), in field order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])

    def boundary_mask(self) -> np.ndarray:
        """Boolean array over all nodes (full index box), True on the boundary."""
        mask = np.zeros(self.nodes, dtype=bool)
        for axis in range(self.dim):
            idx = [slice(None)] * self.dim
            idx[axis] = 0
            mask[tuple(idx)] = True
            idx[axis] = -1
            mask[tuple(idx)] = True
        return mask

    def check(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if w.shape != (self.size,):
            raise GridMismatch(f"field of shape {w.shape} does not match grid with {self.size} interior nodes")
        return w

    def sample(self, fn) -> np.ndarray:
        """Evaluate ``fn(x)`` or ``fn(x, y)`` at interior nodes."""
        xs = self.coordinates()
        return np.asarray(fn(*xs.T), dtype=float).reshape(self.size)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.size)

    @functools.cached_property
    def laplacian(self) -> sp.csr_matrix:
        """Sparse matrix of the 5-point (3-point in 1-D) approximation of -Laplace."""
        mats = [_second_difference(n - 2, h) for n, h in zip(self.nodes, self.spacing)]
        if self.dim == 1:
            return mats[0].tocsr()
        nx, ny = self.interior_shape
        return (sp.kron(mats[0], sp.identity(ny)) + sp.kron(sp.identity(nx), mats[1])).tocsr()


def _second_difference(n: int, h: float) -> sp.dia_matrix:
    main = np.full(n, 2.0 / h**2)
    off = np.full(n - 1, -1.0 / h**2)
    return sp.diags([off, main, off], [-1, 0, 1])


def laplacian_apply(g: Grid, w) -> np.ndarray:
    return g.laplacian @ g.check(w)


def inner(g: Grid, a, b) -> float:
    return g.cell_volume * float(np.dot(g.check(a), g.check(b)))


def norm_l2(g: Grid, a) -> float:
    return float(np.sqrt(inner(g, a, a)))


def norm_inf(g: Grid, a) -> float:
    a = g.check(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def norm_h1_semi(g: Grid, a) -> float:
    """Discrete ||grad a|| from forward differences, jumps to the zero boundary included."""
    full = np.pad(g.check(a).reshape(g.interior_shape), 1)
    total = 0.0
    for axis, h in enumerate(g.spacing):
        total += float(np.sum((np.diff(full, axis=axis) / h) ** 2))
    return float(np.sqrt(g.cell_volume * total))


def eigenvalue_1d(n_interior: int, h: float, k: int) -> float:
    length = h * (n_interior + 1)
    return 2.0 / h**2 * (1.0 - np.cos(k * np.pi * h / length))


def eigenpairs(g: Grid, k: int) -> list[tuple[float, np.ndarray]]:
    """The ``k`` smallest Dirichlet eigenpairs of the discrete -Laplacian.

    Eigenvectors are products of sine modes, normalized so that
    ``inner(g, psi, psi) == 1``. Ties between 2-D modes are ordered by
    their index pair.
    """
    if k < 1 or k > g.size:
        raise ValueError(f"requested {k} eigenpairs, grid has {g.size} interior nodes")
    per_axis = []
    for n, h, e in zip(g.interior_shape, g.spacing, g.extents):
        x = np.arange(1, n + 1) * h
        modes = np.arange(1, n + 1)
        lam = np.array([eigenvalue_1d(n, h, m) for m in modes])
        # each column normalized in the h-weighted inner product
        vec = np.sin(np.outer(x, modes) * np.pi / e) * np.sqrt(2.0 / e)
        per_axis.append((lam, vec))

    if g.dim == 1:
        lam, vec = per_axis[0]
        return [(float(lam[i]), vec[:, i].copy()) for i in range(k)]

    (lx, vx), (ly, vy) = per_axis
    total = lx[:, None] + ly[None, :]
    order = np.lexsort((np.indices(total.shape)[1].ravel(), np.indices(total.shape)[0].ravel(), total.ravel()))
    out = []
    for flat in order[:k]:
        i, j = np.unravel_index(flat, total.shape)
        out.append((float(total[i, j]), np.outer(vx[:, i], vy[:, j]).ravel()))
    return out
