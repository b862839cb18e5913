"""The discrete Schrodinger operator  A = D2 - 2 f  and its spectrum.

``D2`` is the 3-point Dirichlet Laplacian, so ``A`` is symmetric tridiagonal
with off-diagonal ``1/h^2`` and diagonal ``-2/h^2 - 2 f(x_i)``.  Eigenvalues
come from Sturm-sequence bisection; eigenvectors from inverse iteration.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .errors import GridMismatch, ZeroField
from .grid import Field, Grid, check_same_grid, laplacian_values


@dataclass(frozen=True, eq=False)
class TridiagonalOperator:
    grid: Grid
    diagonal: np.ndarray
    off_diagonal: np.ndarray

    def __post_init__(self):
        assert self.diagonal.shape == (self.grid.n,)
        assert self.off_diagonal.shape == (self.grid.n - 1,)

    @property
    def inf_norm(self) -> float:
        """Max absolute row sum (bounds the spectral radius)."""
        row = np.abs(self.diagonal).copy()
        row[:-1] += np.abs(self.off_diagonal)
        row[1:] += np.abs(self.off_diagonal)
        return float(row.max())

    def dense(self) -> np.ndarray:
        return (np.diag(self.diagonal) + np.diag(self.off_diagonal, 1)
                + np.diag(self.off_diagonal, -1))


def assemble(grid: Grid, f: Field) -> TridiagonalOperator:
    if f.grid != grid:
        raise GridMismatch("potential is not sampled on this grid")
    inv_h2 = 1.0 / grid.h ** 2
    diag = -2.0 * inv_h2 - 2.0 * f.values
    off = np.full(grid.n - 1, inv_h2)
    return TridiagonalOperator(grid, diag, off)


def _matvec(op: TridiagonalOperator, u: np.ndarray) -> np.ndarray:
    out = op.diagonal * u
    out[:-1] += op.off_diagonal * u[1:]
    out[1:] += op.off_diagonal * u[:-1]
    return out


def apply(op: TridiagonalOperator, u: Field) -> Field:
    if u.grid != op.grid:
        raise GridMismatch("operand lives on a different grid")
    return u.like(_matvec(op, u.values))


def quadratic_form(op: TridiagonalOperator, u: Field) -> float:
    """Discrete <u, A u> = h * u^T A u."""
    if u.grid != op.grid:
        raise GridMismatch("operand lives on a different grid")
    if not np.any(u.values):
        raise ZeroField("quadratic form needs a nonzero field")
    return float(op.grid.h * np.dot(u.values, _matvec(op, u.values)))


def sturm_count(op: TridiagonalOperator, shifts) -> np.ndarray:
    """Number of eigenvalues strictly below each shift.

    Counts negative pivots of the LDL^T factorization of ``A - shift``; the
    loop runs over rows and is vectorized across shifts.
    """
    shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
    d, e2 = op.diagonal, op.off_diagonal ** 2
    tiny = np.finfo(float).tiny / np.finfo(float).eps
    count = np.zeros(shifts.shape, dtype=np.int64)
    q = d[0] - shifts
    for i in range(len(d)):
        if i:
            q = (d[i] - shifts) - e2[i - 1] / q
        q = np.where(q == 0.0, -tiny, q)
        count += q < 0.0
    return count


def gershgorin_bounds(op: TridiagonalOperator) -> tuple[float, float]:
    r = np.zeros_like(op.diagonal)
    r[:-1] += np.abs(op.off_diagonal)
    r[1:] += np.abs(op.off_diagonal)
    return float(np.min(op.diagonal - r)), float(np.max(op.diagonal + r))


def eigenvalues(op: TridiagonalOperator, tol: float | None = None,
                indices=None) -> np.ndarray:
    """Eigenvalues in ascending order by simultaneous bisection.

    With ``tol=None`` every bracket is shrunk until it can no longer be split in
    floating point.  ``indices`` restricts the computation to selected
    (0-based, ascending) eigenvalue indices.
    """
    n = op.grid.n
    k = np.arange(n) if indices is None else np.sort(np.atleast_1d(indices))
    lo_b, hi_b = gershgorin_bounds(op)
    pad = 1e-14 * max(abs(lo_b), abs(hi_b), 1.0)
    lo = np.full(k.shape, lo_b - pad)
    hi = np.full(k.shape, hi_b + pad)
    eps = np.finfo(float).eps
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if tol is None:
            active = (mid > lo) & (mid < hi)
        else:
            active = (hi - lo) > tol
        if not np.any(active):
            break
        c = sturm_count(op, mid[active])
        below = c > k[active]
        idx = np.flatnonzero(active)
        hi[idx[below]] = mid[active][below]
        lo[idx[~below]] = mid[active][~below]
        if tol is None:
            # brackets narrower than a few ulps are final
            done = (hi - lo) <= 4 * eps * np.maximum(np.abs(lo), np.abs(hi))
            lo = np.where(done, 0.5 * (lo + hi), lo)
            hi = np.where(done, lo, hi)
    return 0.5 * (lo + hi)


def eigenvector(op: TridiagonalOperator, lam: float, iterations: int = 3) -> np.ndarray:
    """Unit-2-norm eigenvector for eigenvalue ``lam`` by inverse iteration."""
    n = op.grid.n
    ab = np.zeros((3, n))
    ab[0, 1:] = op.off_diagonal
    ab[2, :-1] = op.off_diagonal
    scale = max(op.inf_norm, 1.0)
    shift = lam + 1e-13 * scale
    ab[1] = op.diagonal - shift
    # deterministic start vector with no special symmetry
    v = 1.0 + 0.1 * np.sin(np.arange(1, n + 1) * 0.7548776662466927)
    v /= np.linalg.norm(v)
    for _ in range(iterations):
        try:
            w = solve_banded((1, 1), ab, v, check_finite=False)
        except LinAlgError:
            shift += 1e-12 * scale
            ab[1] = op.diagonal - shift
            continue
        v = w / np.linalg.norm(w)
    return v


def eigenpair_residual(op: TridiagonalOperator, lam: float, v: np.ndarray) -> float:
    """||A v - lam v||_2 / ||v||_2."""
    return float(np.linalg.norm(_matvec(op, v) - lam * v) / np.linalg.norm(v))


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    eigenvalues: np.ndarray
    max_eigenvalue: float
    min_abs_eigenvalue: float
    negative_definite: bool

    def write_csv(self, path) -> int:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "eigenvalue"])
            for i, lam in enumerate(self.eigenvalues, start=1):
                w.writerow([i, repr(float(lam))])
        return len(self.eigenvalues)


def spectrum_report(op: TridiagonalOperator, tol_def: float = 1e-12,
                    tol: float | None = None) -> SpectrumReport:
    lam = eigenvalues(op, tol=tol)
    return SpectrumReport(
        eigenvalues=lam,
        max_eigenvalue=float(lam[-1]),
        min_abs_eigenvalue=float(np.min(np.abs(lam))),
        negative_definite=bool(lam[-1] < -tol_def),
    )


def compute_phi(grid: Grid, f: Field) -> Field:
    """Source term making ``f`` an equilibrium of  u_t = D2 u - u^2 + phi."""
    check_same_grid(f)
    if f.grid != grid:
        raise GridMismatch("potential is not sampled on this grid")
    return f.like(f.values ** 2 - laplacian_values(f.values, grid.h))
