"""Discrete Helmholtz projection onto divergence-free velocity fields.

``project`` subtracts the gradient of a pressure-like potential obtained
from a Neumann/periodic Poisson solve (conjugate gradients, mean-zero
pinning), leaving a field whose discrete divergence is below the requested
tolerance and whose wall-normal components are exactly zero.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels as kernels
from .errors import NumericsError
from .grid import ScalarField, VectorField, divergence, gradient, scalar_l2


@dataclass
class PressureSolveStats:
    iterations: int
    final_residual: float


def _poisson_maxiter(grid):
    return 200 + 40 * max(grid.cells)


def project(v, tol):
    """Return ``(w, q, stats)`` with ``w = v - grad(q)`` discretely
    divergence-free to ``tol`` (L2) and zero normal components at walls."""
    grid = v.grid
    w = v.copy().enforce_no_slip()
    rhs = divergence(w)
    # Neumann compatibility: the solvable right side is mean-free.
    rhs.values -= np.mean(rhs.values)
    q_arr, iters, res = kernels.cg_solve(
        "poisson",
        -rhs.values,
        np.zeros(grid.cells),
        grid.h,
        grid.periodic,
        0,
        0.0,
        0.5 * tol,
        _poisson_maxiter(grid),
    )
    if res > 0.5 * tol:
        raise NumericsError(
            f"pressure Poisson solve stalled at residual {res:.3e} (tol {tol:.3e})",
            residual=res,
            iterations=iters,
        )
    q_arr = q_arr - np.mean(q_arr)
    q = ScalarField(grid, q_arr)
    gq = gradient(q)
    out = VectorField(grid, [wc - gc for wc, gc in zip(w.components, gq.components)])
    out.enforce_no_slip()
    stats = PressureSolveStats(iterations=iters, final_residual=res)
    return out, q, stats


def divergence_residual(v):
    """Discrete L2 norm of the divergence of ``v``."""
    return scalar_l2(divergence(v))
