"""Gaussian quasi-modes for the discrete Schrodinger operator.

A unit-norm Gaussian of width A centred at B has ``||D2 psi||^2 ~ 3/(4 A^4)``
and, once B is far from the support of f, ``||f psi||^2`` is as small as we
like.  Choosing A from m and then B from A gives a sequence whose residual
``||(D2 - 2f) psi_m||^2`` is at most 9/(2m) while ``||psi_m|| = 1``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.special import erfc

from .errors import DomainTooSmall, InvalidArgument
from .grid import Field, Grid, laplacian_values, lp_norm
from .schrodinger import assemble, apply

WIDTH_SAFETY = 1.1
MAX_TAIL = 1e-10


@dataclass(frozen=True, eq=False)
class GaussianProbe:
    A: float
    B: float
    field: Field
    # L2 norm the textbook prefactor (1/(2 A sqrt(pi)))^(1/2) would have produced
    prefactor_norm: float


@dataclass(frozen=True)
class ProbeRecord:
    m: int
    A_m: float
    B_m: float
    lap_energy: float
    pot_energy: float
    residual: float
    L: float

    @property
    def bound(self) -> float:
        return 9.0 / (2 * self.m)

    @property
    def triangle_bound(self) -> float:
        return (math.sqrt(self.lap_energy) + 2.0 * math.sqrt(self.pot_energy)) ** 2


def gaussian_tail(grid: Grid, A: float, B: float) -> float:
    """Fraction of the mass of exp(-(x-B)^2/(2A^2)) lying outside [-L, L]."""
    s = math.sqrt(2.0) * A
    return 0.5 * (float(erfc((grid.L - B) / s)) + float(erfc((grid.L + B) / s)))


def gaussian_probe(grid: Grid, A: float, B: float) -> GaussianProbe:
    if not A > 0:
        raise InvalidArgument(f"probe width must be positive, got {A}")
    tail = gaussian_tail(grid, A, B)
    if tail > MAX_TAIL:
        raise DomainTooSmall(
            f"Gaussian (A={A:g}, B={B:g}) leaks {tail:.3g} of its mass past L={grid.L:g}")
    g = np.exp(-((grid.x - B) ** 2) / (2.0 * A * A))
    raw = Field(grid, g)
    norm = lp_norm(raw, 2)
    prefactor = math.sqrt(1.0 / (2.0 * A * math.sqrt(math.pi)))
    return GaussianProbe(A, B, Field(grid, g / norm), prefactor * norm)


def lap_energy(probe: GaussianProbe) -> float:
    grid = probe.field.grid
    return float(grid.h * np.sum(laplacian_values(probe.field.values, grid.h) ** 2))


def pot_energy(probe: GaussianProbe, f: Field) -> float:
    return float(f.grid.h * np.sum((f.values * probe.field.values) ** 2))


def choose_width(m: int) -> float:
    """Width with 3/(4 A^4) < 1/(2m), padded by a safety factor for discretization."""
    if int(m) != m or m < 1:
        raise InvalidArgument(f"m must be a positive integer, got {m}")
    return (2.0 * m) ** 0.25 * 1.5 ** 0.25 * WIDTH_SAFETY


def _support_edge(f: Field) -> float | None:
    nz = np.flatnonzero(f.values)
    if nz.size == 0:
        return None
    x = f.grid.x
    return float(max(abs(x[nz[0]]), abs(x[nz[-1]])))


def choose_center(m: int, A: float, f: Field) -> float:
    """First admissible centre on the scan 0, edge, edge + A, edge + 2A, ...

    ``edge`` is the outermost point of supp f.  Raises DomainTooSmall when the
    scan leaves the grid before the potential energy drops below 1/(2m).
    """
    if int(m) != m or m < 1:
        raise InvalidArgument(f"m must be a positive integer, got {m}")
    budget = 1.0 / (2 * m)
    edge = _support_edge(f)
    candidates = [0.0]
    if edge is not None:
        candidates += [edge + k * A for k in range(int(2 * f.grid.L / A) + 2)]
    for B in candidates:
        try:
            probe = gaussian_probe(f.grid, A, B)
        except DomainTooSmall:
            break
        if pot_energy(probe, f) < budget:
            return B
    raise DomainTooSmall(f"no admissible centre for m={m}, A={A:g} inside L={f.grid.L:g}")


@dataclass(frozen=True)
class GridPolicy:
    """Enlarge L (same spacing) whenever the probe comes within ``margin`` widths of ±L."""

    margin: float = 6.0
    max_L: float | None = None


def _resample(f: Field | Callable, grid: Grid) -> Field:
    if isinstance(f, Field):
        return f if f.grid == grid else f.padded_to(grid)
    return Field.from_function(grid, f)


def residual_sequence(f: Field, m_max: int, grid_policy: GridPolicy | None = None,
                      grid: Grid | None = None) -> list[ProbeRecord]:
    """Probe records for m = 1..m_max.

    ``f`` is a sampled Field (zero-padded when the grid grows) or a callable
    potential, in which case ``grid`` gives the starting grid.
    """
    if int(m_max) != m_max or m_max < 1:
        raise InvalidArgument("m_max must be a positive integer")
    policy = grid_policy or GridPolicy()
    if isinstance(f, Field):
        grid = f.grid
    elif grid is None:
        raise InvalidArgument("a callable potential needs a starting grid")
    records = []
    for m in range(1, m_max + 1):
        A = choose_width(m)
        while True:
            fm = _resample(f, grid)
            try:
                B = choose_center(m, A, fm)
                if B + policy.margin * A <= grid.L:
                    break
            except DomainTooSmall:
                pass
            if policy.max_L is not None and 2 * grid.L > policy.max_L:
                raise DomainTooSmall(f"probe for m={m} does not fit below L={policy.max_L}")
            grid = grid.enlarged()
        probe = gaussian_probe(grid, A, B)
        lap = lap_energy(probe)
        if not lap < 1.0 / (2 * m):
            # safety factor did not absorb the discretization error
            raise InvalidArgument(f"grid too coarse: lap_energy {lap:.4g} >= 1/(2m) at m={m}")
        op = assemble(grid, fm)
        r = apply(op, probe.field).values
        records.append(ProbeRecord(m, A, B, lap, pot_energy(probe, fm),
                                   float(grid.h * np.dot(r, r)), grid.L))
    return records


def write_residuals_csv(records: list[ProbeRecord], path) -> int:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["m", "A_m", "B_m", "lap_energy", "pot_energy", "residual",
                    "bound_9_over_2m"])
        for r in records:
            w.writerow([r.m, repr(r.A_m), repr(r.B_m), repr(r.lap_energy),
                        repr(r.pot_energy), repr(r.residual), repr(r.bound)])
    return len(records)
