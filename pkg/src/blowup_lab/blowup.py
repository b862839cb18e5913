"""Small initial data, heat-kernel witnesses and the Riccati comparison.

The pipeline builds a nonpositive bump datum with ``h(0) = -4 ||f||_inf (1 +
margin)`` and ``||h||_p < epsilon``, finds a time ``t0`` at which the heat
average ``int H(t0, x) h(x) dx`` drops below ``-2 ||f||_inf``, follows

    J(s) = int H(t - s + eps, x) u(s, x) dx,      t + eps = t0,

along the nonlinear solution, and compares it with the solution ``y`` of
``y' = -y^2 - c y``, ``y(0) = J(0)``, ``c = 2 ||f||_inf``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import (InvalidArgument, NoWitnessFound, ResolutionTooCoarse,
                     SnapshotGap, UnsupportedP)
from .grid import Field, Grid, integrate, lp_norm
from .potentials import bump_lp_norm, bump_profile, sup_norm
from .solver import Kind, Problem, SolverConfig, Trajectory
from .solver import integrate as solve

DEFAULT_T0 = tuple(10.0 ** -k for k in range(1, 9))
AMPLITUDE_MARGIN = 0.05
WIDTH_FRACTION = 0.9
MIN_BUMP_NODES = 8


def heat_kernel(t: float, x) -> np.ndarray:
    if not t > 0:
        raise InvalidArgument("heat kernel needs t > 0")
    x = np.asarray(x, dtype=float)
    return np.exp(-x * x / (4.0 * t)) / math.sqrt(4.0 * math.pi * t)


@dataclass(frozen=True, eq=False)
class InitialDatum:
    M: float
    w: float
    p: float
    epsilon_budget: float
    field: Field

    @property
    def norm(self) -> float:
        return lp_norm(self.field, self.p)


def make_initial(f: Field, p: float, epsilon: float, grid: Grid | None = None,
                 margin: float = AMPLITUDE_MARGIN) -> InitialDatum:
    """Datum ``-M bump(x/w)`` with ``M = 4 ||f||_inf (1 + margin)`` and small L^p norm.

    ``||h||_p = M w^(1/p) ||bump||_p``, so ``w`` is taken as a fixed fraction
    of ``(epsilon / (M ||bump||_p))^p`` and the norm is re-checked by quadrature.
    """
    grid = grid or f.grid
    if p == math.inf:
        raise UnsupportedP("the small-datum construction has no p = inf version")
    if not p >= 1:
        raise InvalidArgument(f"need 1 <= p < inf, got {p}")
    if not epsilon > 0:
        raise InvalidArgument("epsilon must be positive")
    if grid.index_of_origin() is None:
        raise InvalidArgument("grid must have a node at x = 0 (use odd n)")
    fmax = sup_norm(f)
    if fmax == 0.0:
        raise InvalidArgument("potential is identically zero; amplitude would vanish")
    M = 4.0 * fmax * (1.0 + margin)
    w = WIDTH_FRACTION * (epsilon / (M * bump_lp_norm(p))) ** p
    if w < MIN_BUMP_NODES * grid.h:
        raise ResolutionTooCoarse(
            f"bump half-width {w:.3g} spans fewer than {MIN_BUMP_NODES} cells of h={grid.h:.3g}")
    if w >= grid.L:
        raise InvalidArgument("bump does not fit inside the domain")
    field = Field(grid, -M * bump_profile(grid.x / w))
    norm = lp_norm(field, p)
    if not norm < epsilon:
        raise ResolutionTooCoarse(f"quadrature gives ||h||_p = {norm:.6g} >= {epsilon}")
    return InitialDatum(M, w, float(p), float(epsilon), field)


@dataclass(frozen=True)
class Witness:
    t0: float
    integral: float
    threshold: float

    def __post_init__(self):
        if not self.integral < self.threshold:
            raise InvalidArgument("witness integral must lie below the threshold")


def heat_average(h: Field, t0: float) -> float:
    return integrate(h.like(heat_kernel(t0, h.grid.x) * h.values))


def find_witness(h: Field, f: Field, t0_candidates=DEFAULT_T0,
                 mass_tol: float = 1e-6) -> Witness:
    """First candidate ``t0`` whose heat average of ``h`` lies below ``-2 ||f||_inf``.

    Candidates at which the sampled kernel no longer integrates to 1 within
    ``mass_tol`` are unresolved on this grid and are skipped.
    """
    threshold = -2.0 * sup_norm(f)
    tried = []
    for t0 in t0_candidates:
        if not t0 > 0:
            raise InvalidArgument("t0 candidates must be positive")
        mass = integrate(h.like(heat_kernel(t0, h.grid.x)))
        if abs(mass - 1.0) > mass_tol:
            tried.append((t0, None))
            continue
        val = heat_average(h, t0)
        tried.append((t0, val))
        if val < threshold:
            return Witness(float(t0), val, threshold)
    raise NoWitnessFound(f"no candidate beats threshold {threshold:g}: {tried}")


@dataclass(frozen=True, eq=False)
class JSeries:
    s: np.ndarray
    J: np.ndarray
    t: float
    epsilon: float


def j_functional(traj: Trajectory, t: float, epsilon: float,
                 min_records: int = 3) -> JSeries:
    """J at every snapshot with time in [0, t], using v = H(t - s + epsilon, .)."""
    if not (t > 0 and epsilon > 0):
        raise InvalidArgument("t and epsilon must be positive")
    times = list(traj.snapshot_times)
    sel = [i for i, s in enumerate(times) if s <= t * (1 + 1e-12)]
    if len(sel) < min_records or times[0] != 0.0:
        raise SnapshotGap(f"only {len(sel)} snapshots in [0, {t:g}]; record more often")
    x = traj.grid.x
    s = np.array([times[i] for i in sel])
    J = np.array([integrate(traj.snapshots[i].like(
        heat_kernel(t - times[i] + epsilon, x) * traj.snapshots[i].values)) for i in sel])
    return JSeries(s, J, t, epsilon)


def riccati_escape_time(J0: float, c: float) -> float:
    """Finite time at which y' = -y^2 - c y reaches -inf, or inf if it never does."""
    if c == 0.0:
        return -1.0 / J0 if J0 < 0 else math.inf
    if J0 < -c:
        return math.log(J0 / (J0 + c)) / c
    return math.inf


def riccati_closed_form(J0: float, c: float, times) -> np.ndarray:
    s = np.asarray(times, dtype=float)
    if c == 0.0:
        denom = 1.0 + J0 * s
        y = J0 / denom
    else:
        denom = (c + J0) * np.exp(c * s) - J0
        with np.errstate(divide="ignore"):
            y = c * J0 / denom
    escape = riccati_escape_time(J0, c)
    return np.where(s >= escape, -np.inf, y)


def riccati_rk4(J0: float, c: float, times, max_rel_step: float = 1e-3) -> np.ndarray:
    """RK4 integration of y' = -y^2 - c y with steps shrinking like 1/|y|."""
    def g(y):
        return -y * y - c * y

    out = np.empty(len(times))
    y, s = float(J0), 0.0
    base = 1e-4 / max(c, 1.0)
    for i, target in enumerate(np.asarray(times, dtype=float)):
        while s < target:
            dt = min(base, max_rel_step / max(abs(y), abs(c), 1.0), target - s)
            k1 = g(y)
            k2 = g(y + 0.5 * dt * k1)
            k3 = g(y + 0.5 * dt * k2)
            k4 = g(y + dt * k3)
            y += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            s += dt
        out[i] = y
    return out


@dataclass(frozen=True, eq=False)
class RiccatiSeries:
    s: np.ndarray
    y: np.ndarray
    escape_time: float
    oracle_discrepancy: float


def ode_comparison(J0: float, c: float, times, check_tol: float = 1e-8) -> RiccatiSeries:
    """Closed-form comparison solution, cross-checked against RK4 before escape."""
    s = np.asarray(times, dtype=float)
    y = riccati_closed_form(J0, c, s)
    escape = riccati_escape_time(J0, c)
    ok = s < escape
    disc = 0.0
    if np.any(ok):
        y_rk = riccati_rk4(J0, c, s[ok])
        disc = float(np.max(np.abs(y_rk - y[ok]) / (1.0 + np.abs(y[ok]))))
        if disc > check_tol:
            raise ArithmeticError(f"closed form and RK4 disagree by {disc:.3g}")
    return RiccatiSeries(s, y, escape, disc)


@dataclass(eq=False)
class BlowupReport:
    datum: InitialDatum
    witness: Witness
    j_series: JSeries
    ode_series: RiccatiSeries
    comparison_ok: bool
    t_blowup: float | None
    norm_curves: dict[str, np.ndarray]
    trajectory: Trajectory
    sign_ok: bool
    max_u: float
    j_bounds_ok: bool

    @property
    def blew_up(self) -> bool:
        return self.t_blowup is not None

    def header(self) -> dict:
        return {
            "t0": self.witness.t0,
            "integral": self.witness.integral,
            "threshold": self.witness.threshold,
            "t_blowup": self.t_blowup,
            "comparison_ok": self.comparison_ok,
            "escape_time": self.ode_series.escape_time,
            "datum_norm": self.datum.norm,
            "datum_width": self.datum.w,
            "datum_amplitude": self.datum.M,
            "max_u": self.max_u,
        }

    def write_csv(self, path) -> int:
        """J and y on the comparison window, followed by norm growth on the whole run."""
        nc = self.norm_curves
        with Path(path).open("w", newline="") as fh:
            for k, v in self.header().items():
                fh.write(f"# {k} = {v!r}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["s", "J", "y_ode", "l1", "lp", "linf"])
            n_j = len(self.j_series.s)
            for i in range(len(nc["t"])):
                J = repr(float(self.j_series.J[i])) if i < n_j else ""
                y = repr(float(self.ode_series.y[i])) if i < n_j else ""
                w.writerow([repr(float(nc["t"][i])), J, y, repr(float(nc["l1"][i])),
                            repr(float(nc["lp"][i])), repr(float(nc["linf"][i]))])
        return len(nc["t"])


def _concat(first: Trajectory, second: Trajectory) -> Trajectory:
    norms = {k: np.concatenate([first.norms[k], second.norms[k][1:]]) for k in first.norms}
    return Trajectory(first.grid, np.concatenate([first.times, second.times[1:]]), norms,
                      first.snapshots + second.snapshots[1:], second.status,
                      second.t_blowup, first.steps + second.steps,
                      np.concatenate([first.snapshot_times, second.snapshot_times[1:]]))


def run_with_window(problem: Problem, config: SolverConfig, window: float,
                    window_records: int = 40) -> Trajectory:
    """Integrate with every step recorded on [0, window], then per ``config``."""
    dt_w = min(config.dt, window / window_records)
    first = solve(problem, replace(config, dt=dt_w, t_end=window, record_every=1,
                                   dt_initial=None, keep_snapshots=True))
    if first.blew_up or window >= config.t_end:
        return first
    rest = Problem(problem.grid, problem.kind, first.final, problem.f, problem.phi)
    second = solve(rest, replace(config, t_end=config.t_end - window), t_start=window)
    return _concat(first, second)


def comparison_holds(J: np.ndarray, y: np.ndarray, tol_cmp: float = 1e-6) -> bool:
    finite = np.isfinite(y)
    return bool(np.all(J[finite] <= y[finite] + tol_cmp * (1.0 + np.abs(y[finite]))))


def instability_experiment(f: Field, p: float, epsilon: float,
                           solver_config: SolverConfig, t0_candidates=DEFAULT_T0,
                           tol_cmp: float = 1e-6, window_records: int = 40,
                           sign_tol: float = 1e-12) -> BlowupReport:
    grid = f.grid
    datum = make_initial(f, p, epsilon, grid)
    witness = find_witness(datum.field, f, t0_candidates)
    t = eps = 0.5 * witness.t0
    problem = Problem(grid, Kind.NONLINEAR, datum.field, f=f)
    traj = run_with_window(problem, solver_config, t, window_records)
    js = j_functional(traj, t, eps)
    c = 2.0 * sup_norm(f)
    ode = ode_comparison(float(js.J[0]), c, js.s)
    horizon = min(ode.escape_time, traj.t_blowup if traj.blew_up else math.inf)
    before = js.s < horizon
    cmp_ok = comparison_holds(js.J[before], ode.y[before], tol_cmp)

    n_j = len(js.s)
    l1 = traj.norms["l1"][:n_j]
    linf = traj.norms["linf"][:n_j]
    absJ = np.abs(js.J)
    slack = 1e-9 * (1.0 + absJ)
    bounds_ok = bool(np.all(absJ <= l1 / math.sqrt(4 * math.pi * eps) + slack)
                     and np.all(absJ <= linf + slack))

    if p == 1:
        lp = traj.norms["l1"]
    elif p == 2:
        lp = traj.norms["l2"]
    elif len(traj.snapshots) == len(traj.times):
        lp = np.array([lp_norm(snap, p) for snap in traj.snapshots])
    else:
        lp = np.full(len(traj.times), np.nan)
    curves = {"t": traj.times, "l1": traj.norms["l1"], "lp": lp, "linf": traj.norms["linf"]}
    max_u = float(np.max(traj.norms["max_u"]))
    return BlowupReport(datum, witness, js, ode, cmp_ok, traj.t_blowup, curves, traj,
                        max_u <= sign_tol, max_u, bounds_ok)
