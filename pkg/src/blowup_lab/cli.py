"""``blowup-lab run <config> [--out DIR] [--override key=value ...]``.

Config files are ``key = value`` lines; ``#`` starts a comment.  Each command
writes its CSVs, a ``manifest.txt`` with every resolved parameter, and a
gnuplot script.  Exit status: 0 success, 2 a checked property failed, 1 error.
"""

from __future__ import annotations

import argparse
import math
import platform
import sys
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .blowup import DEFAULT_T0, instability_experiment, make_initial
from .errors import InvalidValue, LabError, ParseError, UnknownKey
from .grid import Field, lp_norm, make_grid
from .potentials import Bump, Plateau
from .probe import GridPolicy, residual_sequence, write_residuals_csv
from .schrodinger import assemble, compute_phi, spectrum_report
from .solver import Kind, Problem, SolverConfig, gaussian_initial, heat_reference, integrate

COMMANDS = ("spectrum", "residuals", "blowup", "conjugacy", "linear-contrast", "convergence")


@dataclass
class ExperimentConfig:
    command: str
    L: float = 20.0
    n: int = 1999
    potential: str = "bump"
    bump_center: float = 0.0
    bump_width: float = 2.0
    bump_height: float = 1.0
    scheme: str = "imex_cn"
    dt: float = 1e-3
    t_end: float = 1.0
    blowup_threshold: float = 1e6
    record_every: int = 10
    dt_initial: float | None = None
    dt_ramp: float = 1.1
    m_max: int = 20
    p: float = 2.0
    epsilon: float = 0.1
    t0_grid: tuple = DEFAULT_T0
    tol_def: float = 1e-12
    levels: int = 3
    init_amplitude: float = 0.5
    init_width: float = 1.0
    output_dir: str = "out"
    seed: int = 0

    def potential_fn(self):
        cls = {"bump": Bump, "plateau": Plateau}[self.potential]
        return cls(self.bump_center, self.bump_width, self.bump_height)

    def solver_config(self, **kw) -> SolverConfig:
        base = dict(scheme=self.scheme, dt=self.dt, t_end=self.t_end,
                    blowup_threshold=self.blowup_threshold, record_every=self.record_every,
                    dt_initial=self.dt_initial, dt_ramp=self.dt_ramp)
        base.update(kw)
        return SolverConfig(**base)


_POSITIVE = {"L", "n", "bump_width", "dt", "t_end", "blowup_threshold", "record_every",
             "dt_initial", "dt_ramp", "m_max", "epsilon", "tol_def", "levels", "init_width"}
_CHOICES = {"command": COMMANDS, "potential": ("bump", "plateau"),
            "scheme": ("explicit_rk4", "imex_cn")}


def _convert(key: str, raw: str, line: int | None):
    ftype = {f.name: f.type for f in fields(ExperimentConfig)}[key]
    try:
        if key in _CHOICES:
            if raw not in _CHOICES[key]:
                raise ValueError(f"expected one of {', '.join(_CHOICES[key])}")
            return raw
        if key == "t0_grid":
            vals = tuple(float(v) for v in raw.split(",") if v.strip())
            if not vals or any(v <= 0 for v in vals):
                raise ValueError("t0 candidates must be positive")
            return vals
        if key == "dt_initial" and raw.lower() in ("none", ""):
            return None
        if key == "p":
            val = math.inf if raw.lower() in ("inf", "infinity") else float(raw)
            if not val >= 1:
                raise ValueError("p must be >= 1")
            return val
        if "int" in ftype and "float" not in ftype:
            val = int(raw)
        elif "float" in ftype:
            val = float(raw)
            if not math.isfinite(val):
                raise ValueError("must be finite")
        else:
            val = raw
    except ValueError as exc:
        raise InvalidValue(f"{key} = {raw!r}: {exc}", line) from None
    if key in _POSITIVE and not val > 0:
        raise InvalidValue(f"{key} must be positive, got {raw}", line)
    return val


def parse_config(text: str, overrides=()) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    values: dict = {}
    entries = [(i, ln) for i, ln in enumerate(text.splitlines(), start=1)]
    entries += [(None, ov) for ov in overrides]
    for lineno, raw_line in entries:
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw_line.strip()!r}", lineno)
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise UnknownKey(f"unknown key {key!r}", lineno)
        values[key] = _convert(key, raw, lineno)
    if "command" not in values:
        raise ParseError("missing required key 'command'")
    return ExperimentConfig(**values)


# --- recipes -----------------------------------------------------------------

def _grid_and_f(cfg):
    grid = make_grid(cfg.L, cfg.n)
    return grid, cfg.potential_fn().sample(grid)


def _run_spectrum(cfg, out):
    grid, f = _grid_and_f(cfg)
    rep = spectrum_report(assemble(grid, f), cfg.tol_def)
    rows = {"spectrum.csv": rep.write_csv(out / "spectrum.csv")}
    info = {"max_eigenvalue": rep.max_eigenvalue,
            "min_abs_eigenvalue": rep.min_abs_eigenvalue,
            "negative_definite": rep.negative_definite}
    ok = rep.negative_definite if np.all(f.values >= 0) else True
    return ok, rows, info


def _run_residuals(cfg, out):
    grid, f = _grid_and_f(cfg)
    recs = residual_sequence(f, cfg.m_max, GridPolicy())
    rows = {"residuals.csv": write_residuals_csv(recs, out / "residuals.csv")}
    ok = all(r.lap_energy < 1 / (2 * r.m) and r.pot_energy < 1 / (2 * r.m)
             and r.residual <= r.bound for r in recs)
    return ok, rows, {"final_L": recs[-1].L, "last_residual": recs[-1].residual}


def _run_blowup(cfg, out):
    grid, f = _grid_and_f(cfg)
    rep = instability_experiment(f, cfg.p, cfg.epsilon, cfg.solver_config(), cfg.t0_grid)
    rows = {"blowup.csv": rep.write_csv(out / "blowup.csv"),
            "trajectory.csv": rep.trajectory.write_csv(out / "trajectory.csv")}
    info = dict(rep.header(), sign_ok=rep.sign_ok, j_bounds_ok=rep.j_bounds_ok)
    return rep.blew_up and rep.comparison_ok and rep.sign_ok, rows, info


def _run_conjugacy(cfg, out):
    grid, f = _grid_and_f(cfg)
    v0 = gaussian_initial(grid, cfg.init_width, 0.0, -cfg.init_amplitude)
    phi = compute_phi(grid, f)
    sc = cfg.solver_config(record_every=1)
    tr_v = integrate(Problem(grid, Kind.NONLINEAR, v0, f=f), sc)
    tr_w = integrate(Problem(grid, Kind.PDE1, v0.like(f.values + v0.values), phi=phi), sc)
    diff = np.array([np.max(np.abs(w.values - f.values - v.values))
                     for v, w in zip(tr_v.snapshots, tr_w.snapshots)])
    with (out / "conjugacy.csv").open("w") as fh:
        fh.write("t,max_abs_diff\n")
        for t, d in zip(tr_v.times, diff):
            fh.write(f"{float(t)!r},{float(d)!r}\n")
    return bool(diff.max() <= 1e-10), {"conjugacy.csv": len(diff)}, {"max_abs_diff": diff.max()}


def _run_linear_contrast(cfg, out):
    grid, f = _grid_and_f(cfg)
    datum = make_initial(f, cfg.p, cfg.epsilon, grid)
    sc = cfg.solver_config(keep_snapshots=False)
    nl = integrate(Problem(grid, Kind.NONLINEAR, datum.field, f=f), sc)
    horizon = nl.t_blowup if nl.blew_up else cfg.t_end
    lin = integrate(Problem(grid, Kind.LINEARIZED, datum.field, f=f),
                    replace(sc, t_end=horizon))
    rows = {"nonlinear.csv": nl.write_csv(out / "nonlinear.csv"),
            "linearized.csv": lin.write_csv(out / "linearized.csv")}
    l2 = lin.norms["l2"]
    decays = bool(np.all(np.diff(l2) < 0) and l2[-1] < 0.5 * l2[0])
    info = {"nonlinear_status": nl.status, "t_blowup": nl.t_blowup,
            "linear_l2_ratio": l2[-1] / l2[0], "datum_norm": lp_norm(datum.field, 2)}
    return decays and nl.blew_up, rows, info


def _run_convergence(cfg, out):
    A, t_ref = cfg.init_width, 0.5
    rows_out, errs = [], []
    n = cfg.n
    for _ in range(cfg.levels):
        grid = make_grid(cfg.L, n)
        dt = 0.25 * grid.h ** 2 if cfg.scheme == "explicit_rk4" else cfg.dt
        sc = SolverConfig(scheme=cfg.scheme, dt=dt, t_end=t_ref, record_every=10 ** 9,
                          keep_snapshots=False)
        tr = integrate(Problem(grid, Kind.LINEARIZED, gaussian_initial(grid, A),
                               f=Field.zeros(grid)), sc)
        err = float(np.max(np.abs(tr.final.values - heat_reference(t_ref, grid.x, (A, 0.0)))))
        errs.append(err)
        rows_out.append((n, grid.h, dt, err))
        n = 2 * n + 1
    ratios = [math.nan] + [errs[i - 1] / errs[i] for i in range(1, len(errs))]
    with (out / "convergence.csv").open("w") as fh:
        fh.write("n,h,dt,linf_error,ratio\n")
        for (nn, h, dt, e), r in zip(rows_out, ratios):
            fh.write(f"{nn},{h!r},{dt!r},{e!r},{r!r}\n")
    ok = all(3.2 <= r <= 4.8 for r in ratios[1:])
    return ok, {"convergence.csv": len(errs)}, {"ratios": ratios[1:]}


RECIPES = {
    "spectrum": _run_spectrum,
    "residuals": _run_residuals,
    "blowup": _run_blowup,
    "conjugacy": _run_conjugacy,
    "linear-contrast": _run_linear_contrast,
    "convergence": _run_convergence,
}

_GNUPLOT = {
    "spectrum.csv": "plot '{f}' using 1:2 with points title 'eigenvalues'",
    "residuals.csv": "set logscale y\nplot '{f}' using 1:6 with lp title 'residual', "
                     "'{f}' using 1:7 with l title '9/(2m)'",
    "blowup.csv": "set logscale y\nplot '{f}' using 1:(abs($6)) with l title 'linf'",
    "trajectory.csv": "set logscale y\nplot '{f}' using 1:4 with l title 'linf'",
    "nonlinear.csv": "set logscale y\nplot '{f}' using 1:4 with l title 'nonlinear linf'",
    "linearized.csv": "plot '{f}' using 1:3 with l title 'linearized l2'",
    "conjugacy.csv": "plot '{f}' using 1:2 with l title 'conjugacy defect'",
    "convergence.csv": "set logscale xy\nplot '{f}' using 2:4 with lp title 'error'",
}


def _plain(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, (list, tuple)):
        return type(v)(_plain(x) for x in v)
    return v


def _write_manifest(path: Path, cfg, rows, info, ok, wall):
    lines = [f"{k} = {v!r}" if not isinstance(v, str) else f"{k} = {v}"
             for k, v in asdict(cfg).items()]
    lines += [f"rows.{name} = {count}" for name, count in rows.items()]
    lines += [f"result.{k} = {_plain(v)!r}" for k, v in info.items()]
    lines += [f"property_ok = {ok}", f"version.blowup_lab = {__version__}",
              f"version.numpy = {np.__version__}", f"version.scipy = {scipy.__version__}",
              f"version.python = {platform.python_version()}", f"wall_time_s = {wall:.3f}"]
    path.write_text("\n".join(lines) + "\n")


def run(cfg: ExperimentConfig, out_dir=None) -> int:
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    ok, rows, info = RECIPES[cfg.command](cfg, out)
    wall = time.perf_counter() - start
    script = ["set datafile separator ','", "set key autotitle columnhead"]
    for name in rows:
        script += [f"# {name}", _GNUPLOT[name].format(f=name), "pause -1"]
    (out / "plot.gp").write_text("\n".join(script) + "\n")
    _write_manifest(out / "manifest.txt", cfg, rows, info, ok, wall)
    return 0 if ok else 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="blowup-lab")
    sub = parser.add_subparsers(dest="action", required=True)
    p_run = sub.add_parser("run", help="run an experiment recipe from a config file")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("--out", type=Path, default=None)
    p_run.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config.read_text(), args.override)
        code = run(cfg, args.out)
    except (LabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{cfg.command}: {'ok' if code == 0 else 'PROPERTY VIOLATED'}")
    return code


if __name__ == "__main__":
    sys.exit(main())
