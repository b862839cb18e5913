#!/usr/bin/env python3
"""Follow the eps = 0.1 datum for a long time on a wide grid.

The narrow datum is integrated on a fine grid until it has spread out, then
interpolated onto a coarse wide grid and continued.  Prints the norm history.
"""
import argparse

import numpy as np

from blowup_lab.blowup import make_initial
from blowup_lab.grid import Field, make_grid
from blowup_lab.potentials import Bump
from blowup_lab.solver import Kind, Problem, SolverConfig, integrate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=float, default=0.1)
    ap.add_argument("--fine-n", type=int, default=160001)
    ap.add_argument("--t-switch", type=float, default=1.0)
    ap.add_argument("--wide-L", type=float, default=400.0)
    ap.add_argument("--wide-n", type=int, default=16001)
    ap.add_argument("--t-end", type=float, default=5000.0)
    args = ap.parse_args()

    fine = make_grid(4.0, args.fine_n)
    datum = make_initial(Bump().sample(fine), 2, args.eps)
    first = integrate(Problem(fine, Kind.NONLINEAR, datum.field, f=Bump().sample(fine)),
                      SolverConfig(dt=1e-2, t_end=args.t_switch, record_every=100,
                                   keep_snapshots=False, dt_initial=fine.h ** 2,
                                   dt_ramp=1.05))
    wide = make_grid(args.wide_L, args.wide_n)
    u = Field(wide, np.interp(wide.x, fine.x, first.final.values, left=0.0, right=0.0))
    second = integrate(Problem(wide, Kind.NONLINEAR, u, f=Bump().sample(wide)),
                       SolverConfig(dt=0.05, t_end=args.t_end - args.t_switch, record_every=2000,
                                    keep_snapshots=False), t_start=args.t_switch)
    print("t,l1,l2,linf,status")
    for tr in (first, second):
        for i in range(0, len(tr.times), max(1, len(tr.times) // 10)):
            print(f"{tr.times[i]:g},{tr.norms['l1'][i]:.4g},{tr.norms['l2'][i]:.4g},"
                  f"{tr.norms['linf'][i]:.4g},{tr.status}")


if __name__ == "__main__":
    main()
