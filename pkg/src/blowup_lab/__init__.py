"""Desk-scale experiments on the zero equilibrium of u_t = u_xx - 2 f u - u^2."""

__version__ = "0.1.0"

from .grid import Field, Grid, integrate, lp_norm, make_grid  # noqa: E402,F401
