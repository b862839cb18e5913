#!/usr/bin/env python3
"""Scan the datum size eps and report which perturbations blow up on a fixed grid."""
import argparse

from blowup_lab.blowup import instability_experiment
from blowup_lab.errors import LabError
from blowup_lab.grid import make_grid
from blowup_lab.potentials import Bump
from blowup_lab.solver import SolverConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=float, nargs="+", default=[1, 2, 3, 4, 5, 6])
    ap.add_argument("--L", type=float, default=12.0)
    ap.add_argument("--n", type=int, default=2399)
    ap.add_argument("--t-end", type=float, default=20.0)
    ap.add_argument("--dt", type=float, default=1e-3)
    args = ap.parse_args()

    g = make_grid(args.L, args.n)
    f = Bump().sample(g)
    cfg = SolverConfig(scheme="imex_cn", dt=args.dt, t_end=args.t_end, record_every=50,
                       keep_snapshots=False)
    print("eps,t0,status,t_blowup,linf_final,escape_time")
    for eps in args.eps:
        try:
            rep = instability_experiment(f, 2, eps, cfg)
        except LabError as exc:
            print(f"{eps},,error: {exc},,,")
            continue
        tr = rep.trajectory
        print(f"{eps},{rep.witness.t0:g},{tr.status},{rep.t_blowup},"
              f"{tr.norms['linf'][-1]:.4g},{rep.ode_series.escape_time:.4g}")


if __name__ == "__main__":
    main()
