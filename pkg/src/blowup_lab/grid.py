"""Uniform 1-D Dirichlet grid, sampled fields, quadrature and norms.

The real line is truncated to ``[-L, L]``.  Only interior nodes are stored;
the two boundary values are identically zero, so the trapezoid rule reduces
to ``h * sum(values)`` and the 3-point Laplacian stays symmetric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import GridMismatch, InvalidArgument, NonFiniteState


@dataclass(frozen=True)
class Grid:
    L: float
    n: int

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise InvalidArgument(f"half width L must be positive, got {self.L}")
        if int(self.n) != self.n or self.n < 3:
            raise InvalidArgument(f"need at least 3 interior points, got {self.n}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / (self.n + 1)

    @cached_property
    def x(self) -> np.ndarray:
        x = -self.L + self.h * np.arange(1, self.n + 1)
        x.flags.writeable = False
        return x

    def index_of_origin(self) -> int | None:
        """Index of the node at x = 0, or None when n is even."""
        return self.n // 2 if self.n % 2 == 1 else None

    def enlarged(self) -> "Grid":
        """Grid on [-2L, 2L] with the same spacing; old nodes are a subset."""
        return Grid(2.0 * self.L, 2 * self.n + 1)


def make_grid(L: float, n_interior: int) -> Grid:
    return Grid(float(L), int(n_interior))


@dataclass(frozen=True, eq=False)
class Field:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise InvalidArgument(
                f"field has shape {v.shape}, grid expects ({self.grid.n},)")
        if not np.all(np.isfinite(v)):
            raise NonFiniteState("field contains NaN or Inf")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[[np.ndarray], np.ndarray]) -> "Field":
        return cls(grid, np.broadcast_to(fn(grid.x), (grid.n,)))

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.n))

    def like(self, values) -> "Field":
        return Field(self.grid, values)

    def padded_to(self, grid: Grid) -> "Field":
        """Zero-extend onto a nested, larger grid with the same spacing."""
        if not math.isclose(grid.h, self.grid.h, rel_tol=1e-12) or grid.n < self.grid.n:
            raise GridMismatch("padding requires a larger grid with equal spacing")
        offset = (grid.n - self.grid.n) // 2
        out = np.zeros(grid.n)
        out[offset:offset + self.grid.n] = self.values
        return Field(grid, out)

    def __len__(self):
        return self.grid.n


def check_same_grid(*fields: Field) -> Grid:
    grid = fields[0].grid
    for other in fields[1:]:
        if other.grid != grid:
            raise GridMismatch(f"fields live on different grids: {grid} vs {other.grid}")
    return grid


def integrate(field: Field) -> float:
    """Trapezoid rule over [-L, L] with zero endpoint values."""
    return float(field.grid.h * np.sum(field.values))


def lp_norm(field: Field, p: float = 2.0) -> float:
    if p == math.inf:
        return float(np.max(np.abs(field.values)))
    if not p >= 1:
        raise InvalidArgument(f"L^p norm needs p >= 1, got {p}")
    return float((field.grid.h * np.sum(np.abs(field.values) ** p)) ** (1.0 / p))


def laplacian_values(u: np.ndarray, h: float) -> np.ndarray:
    """3-point Dirichlet Laplacian of interior values ``u``."""
    out = -2.0 * u
    out[:-1] += u[1:]
    out[1:] += u[:-1]
    return out / (h * h)


def laplacian(field: Field) -> Field:
    return field.like(laplacian_values(field.values, field.grid.h))
