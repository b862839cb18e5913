"""Compactly supported potentials f and the C-infinity bump profile."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .errors import InvalidArgument
from .grid import Field, Grid


def bump_profile(x) -> np.ndarray:
    """exp(1 - 1/(1 - x^2)) on |x| < 1, zero elsewhere; equals 1 at x = 0."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - xi * xi))
    return out


@lru_cache(maxsize=None)
def bump_lp_norm(p: float) -> float:
    """Continuum L^p norm of the unit-support bump profile."""
    if p == math.inf:
        return 1.0
    val, _ = quad(lambda s: math.exp(p * (1.0 - 1.0 / (1.0 - s * s))), -1.0, 1.0,
                  epsabs=0.0, epsrel=1e-13, limit=200)
    return val ** (1.0 / p)


@dataclass(frozen=True)
class Bump:
    """Smooth bump of given height supported on [center - width/2, center + width/2]."""

    center: float = 0.0
    width: float = 2.0
    height: float = 1.0

    def __post_init__(self):
        if not self.width > 0:
            raise InvalidArgument("bump width must be positive")

    def __call__(self, x):
        return self.height * bump_profile((np.asarray(x) - self.center) / (0.5 * self.width))

    def sample(self, grid: Grid) -> Field:
        return Field.from_function(grid, self)

    @property
    def sup_norm(self) -> float:
        return abs(self.height)


@dataclass(frozen=True)
class Plateau:
    """Indicator-shaped potential: ``height`` on a closed interval, zero elsewhere."""

    center: float = 0.0
    width: float = 2.0
    height: float = 1.0

    def __post_init__(self):
        if not self.width > 0:
            raise InvalidArgument("plateau width must be positive")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x - self.center) <= 0.5 * self.width, self.height, 0.0)

    def sample(self, grid: Grid) -> Field:
        return Field.from_function(grid, self)

    @property
    def sup_norm(self) -> float:
        return abs(self.height)


def zero_potential(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def sup_norm(f: Field) -> float:
    return float(np.max(np.abs(f.values)))
