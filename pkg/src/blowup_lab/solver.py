"""Method-of-lines integration of the three evolution problems.

    nonlinear    u_t = D2 u - 2 f u - u^2
    linearized   u_t = D2 u - 2 f u
    pde1         u_t = D2 u - u^2 + phi

``explicit_rk4`` is classical RK4 on the full right side.  ``imex_cn`` treats
D2 by Crank-Nicolson and the whole reaction term explicitly with a Heun
predictor-corrector, so both schemes are second order or better in time and
every kind shares exactly the same diffusion solve.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.linalg import lapack

from .errors import CFLViolation, GridMismatch, InvalidArgument, NonFiniteState
from .grid import Field, Grid, laplacian_values

RK4_CFL = 0.4
IMEX_MAX_DT = 0.5


class Kind(str, Enum):
    NONLINEAR = "nonlinear"
    LINEARIZED = "linearized"
    PDE1 = "pde1"


class Scheme(str, Enum):
    EXPLICIT_RK4 = "explicit_rk4"
    IMEX_CN = "imex_cn"


@dataclass(frozen=True, eq=False)
class Problem:
    grid: Grid
    kind: Kind
    initial: Field
    f: Field | None = None
    phi: Field | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is Kind.PDE1:
            if self.phi is None:
                raise InvalidArgument("pde1 needs a source term phi")
        elif self.f is None:
            raise InvalidArgument(f"{self.kind.value} needs a potential f")
        for fld in (self.initial, self.f, self.phi):
            if fld is not None and fld.grid != self.grid:
                raise GridMismatch("problem fields must share the problem grid")


@dataclass(frozen=True)
class SolverConfig:
    scheme: Scheme = Scheme.IMEX_CN
    dt: float = 1e-3
    t_end: float = 1.0
    blowup_threshold: float = 1e6
    record_every: int = 1
    dt_shrink: float = 0.5
    dt_min: float = 1e-12
    # accuracy guard for the quadratic term: keep dt * max|u| <= growth_limit
    growth_limit: float = 0.05
    keep_snapshots: bool = True
    # optional geometric ramp: start at dt_initial and grow by dt_ramp per step up to dt
    dt_initial: float | None = None
    dt_ramp: float = 1.1
    max_steps: int = 50_000_000

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not (self.dt > 0 and self.t_end > 0):
            raise InvalidArgument("dt and t_end must be positive")
        if not self.blowup_threshold > 1:
            raise InvalidArgument("blowup_threshold must exceed 1")
        if not 0 < self.dt_shrink < 1:
            raise InvalidArgument("dt_shrink must lie in (0, 1)")
        if self.dt_initial is not None and not 0 < self.dt_initial <= self.dt:
            raise InvalidArgument("dt_initial must lie in (0, dt]")
        if not self.dt_ramp >= 1:
            raise InvalidArgument("dt_ramp must be >= 1")
        if self.record_every < 1:
            raise InvalidArgument("record_every must be >= 1")


def _reaction(problem: Problem, u: np.ndarray) -> np.ndarray:
    if problem.kind is Kind.NONLINEAR:
        return -2.0 * problem.f.values * u - u * u
    if problem.kind is Kind.LINEARIZED:
        return -2.0 * problem.f.values * u
    return problem.phi.values - u * u


def _rhs(problem: Problem, u: np.ndarray) -> np.ndarray:
    return laplacian_values(u, problem.grid.h) + _reaction(problem, u)


def rhs(problem: Problem, u: Field) -> Field:
    if u.grid != problem.grid:
        raise GridMismatch("state lives on a different grid")
    return u.like(_rhs(problem, u.values))


@lru_cache(maxsize=64)
def _cn_factor(n: int, h: float, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """LDL^T factors of the SPD tridiagonal I - (dt/2) D2."""
    r = dt / (2.0 * h * h)
    d, e, info = lapack.dpttrf(np.full(n, 1.0 + 2.0 * r), np.full(n - 1, -r))
    if info != 0:
        raise FloatingPointError(f"Crank-Nicolson factorization failed (info={info})")
    return d, e


def _cn_solve(factor, rhs: np.ndarray) -> np.ndarray:
    x, _ = lapack.dpttrs(*factor, rhs)
    return x


def _rk4(problem: Problem, u: np.ndarray, dt: float) -> np.ndarray:
    k1 = _rhs(problem, u)
    k2 = _rhs(problem, u + 0.5 * dt * k1)
    k3 = _rhs(problem, u + 0.5 * dt * k2)
    k4 = _rhs(problem, u + dt * k3)
    return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _imex_cn(problem: Problem, u: np.ndarray, dt: float) -> np.ndarray:
    h = problem.grid.h
    factor = _cn_factor(problem.grid.n, h, dt)
    explicit = u + 0.5 * dt * laplacian_values(u, h)
    r0 = _reaction(problem, u)
    pred = _cn_solve(factor, explicit + dt * r0)
    r1 = _reaction(problem, pred)
    return _cn_solve(factor, explicit + 0.5 * dt * (r0 + r1))


def check_dt(grid: Grid, dt: float, scheme: Scheme) -> None:
    scheme = Scheme(scheme)
    if not dt > 0:
        raise InvalidArgument("dt must be positive")
    if scheme is Scheme.EXPLICIT_RK4 and dt > RK4_CFL * grid.h ** 2:
        raise CFLViolation(f"explicit_rk4 needs dt <= {RK4_CFL} h^2 = "
                           f"{RK4_CFL * grid.h ** 2:.3g}, got {dt:.3g}")
    if scheme is Scheme.IMEX_CN and dt > IMEX_MAX_DT:
        raise CFLViolation(f"imex_cn accuracy guard needs dt <= {IMEX_MAX_DT}, got {dt}")


def _advance(problem: Problem, u: np.ndarray, dt: float, scheme: Scheme) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        if scheme is Scheme.EXPLICIT_RK4:
            return _rk4(problem, u, dt)
        return _imex_cn(problem, u, dt)


def step(problem: Problem, u: Field, dt: float, scheme: Scheme | str) -> Field:
    scheme = Scheme(scheme)
    if u.grid != problem.grid:
        raise GridMismatch("state lives on a different grid")
    check_dt(problem.grid, dt, scheme)
    out = _advance(problem, u.values, dt, scheme)
    if not np.all(np.isfinite(out)):
        raise NonFiniteState("state became non-finite during the step")
    return u.like(out)


NORM_COLUMNS = ("l1", "l2", "linf", "max_u", "boundary_max")


def state_norms(u: np.ndarray, h: float) -> tuple[float, ...]:
    a = np.abs(u)
    return (float(h * a.sum()), float(math.sqrt(h * np.dot(u, u))), float(a.max()),
            float(u.max()), float(max(a[0], a[-1])))


@dataclass(eq=False)
class Trajectory:
    grid: Grid
    times: np.ndarray
    norms: dict[str, np.ndarray]
    snapshots: list[Field]
    status: str
    t_blowup: float | None = None
    steps: int = 0
    snapshot_times: np.ndarray | None = None

    def __post_init__(self):
        if self.snapshot_times is None:
            self.snapshot_times = np.asarray(self.times)[:len(self.snapshots)]

    @property
    def blew_up(self) -> bool:
        return self.status == "blew_up"

    @property
    def final(self) -> Field:
        return self.snapshots[-1]

    def write_csv(self, path) -> int:
        with Path(path).open("w", newline="") as fh:
            status = self.status if not self.blew_up else f"blew_up t_b = {self.t_blowup!r}"
            fh.write(f"# status = {status}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("t",) + NORM_COLUMNS)
            for i, t in enumerate(self.times):
                w.writerow([repr(float(t))] + [repr(float(self.norms[c][i])) for c in NORM_COLUMNS])
        return len(self.times)


def integrate(problem: Problem, config: SolverConfig, t_start: float = 0.0) -> Trajectory:
    """Step from the initial field until ``t_end`` or until max|u| crosses the threshold.

    A step that would cross the threshold (or produce NaN/Inf) is retried with
    dt scaled by ``dt_shrink`` until the crossing step is no longer than
    ``dt_min``; ``t_blowup`` is the end of that step.
    """
    scheme = config.scheme
    grid = problem.grid
    check_dt(grid, config.dt, scheme)
    h = grid.h
    nonlinear = problem.kind is not Kind.LINEARIZED
    u = problem.initial.values.copy()
    t = t_start
    times, rows, snaps = [t], [state_norms(u, h)], [problem.initial]
    snap_times = [t]
    status, t_b, steps, since_record = "completed", None, 0, 0
    end = t_start + config.t_end

    def record(u):
        times.append(t)
        rows.append(state_norms(u, h))
        if config.keep_snapshots:
            snaps.append(Field(grid, u))
            snap_times.append(t)

    dt_override = None
    dt_nominal = config.dt_initial or config.dt
    while t < end * (1 - 1e-15) and steps < config.max_steps:
        dt = dt_nominal
        if nonlinear:
            peak = float(np.max(np.abs(u)))
            while dt * peak > config.growth_limit and dt > config.dt_min:
                dt *= config.dt_shrink
        if dt_override is not None:
            dt = min(dt, dt_override)
        dt = min(dt, end - t)
        new = _advance(problem, u, dt, scheme)
        finite = bool(np.all(np.isfinite(new)))
        crossed = (not finite) or float(np.max(np.abs(new))) >= config.blowup_threshold
        if crossed and (dt > config.dt_min or not finite):
            if dt <= config.dt_min:
                # cannot resolve further; report the bracket start
                status, t_b = "blew_up", t + dt
                break
            dt_override = dt * config.dt_shrink
            continue
        u, t = new, t + dt
        steps += 1
        dt_nominal = min(config.dt, dt_nominal * config.dt_ramp)
        since_record += 1
        if crossed:
            status, t_b = "blew_up", t
            record(u)
            break
        if dt_override is not None and not nonlinear:
            dt_override = None
        if since_record >= config.record_every:
            record(u)
            since_record = 0
    if status == "completed" and times[-1] != t:
        record(u)
    if not config.keep_snapshots:
        snaps.append(Field(grid, u))
        snap_times.append(t)
    norms = {c: np.array([r[i] for r in rows]) for i, c in enumerate(NORM_COLUMNS)}
    return Trajectory(grid, np.array(times), norms, snaps, status, t_b, steps,
                      np.array(snap_times))


def gaussian_initial(grid: Grid, A: float, B: float = 0.0, amplitude: float = 1.0) -> Field:
    return Field(grid, amplitude * np.exp(-((grid.x - B) ** 2) / (2.0 * A * A)))


def heat_reference(t: float, x, initial_gaussian: tuple[float, float]) -> np.ndarray:
    """Exact solution of u_t = u_xx on the line from u(0) = exp(-(x-B)^2/(2A^2))."""
    if not t > 0:
        raise InvalidArgument("heat_reference needs t > 0")
    A, B = initial_gaussian
    var = A * A + 2.0 * t
    return A / np.sqrt(var) * np.exp(-((np.asarray(x, dtype=float) - B) ** 2) / (2.0 * var))
