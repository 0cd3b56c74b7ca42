"""Vectorized NumPy implementation of the hot solver kernels.

This is the fallback backend; the compiled extension implements the same
interface with the conjugate-gradient loop in C. Operator arithmetic is
written as face differences composed into cell differences, matching the
discrete calculus module, so both backends realize the same operator.
"""

import numpy as np

NAME = "numpy"


def _divgrad(x, h, periodic):
    """div(grad(x)) with mirror-ghost Neumann or periodic closure."""
    dims = x.ndim
    out = np.zeros_like(x)
    for d in range(dims):
        hd = h[d]
        if periodic:
            g = (x - np.roll(x, 1, axis=d)) / hd
            out += (np.roll(g, -1, axis=d) - g) / hd
        else:
            g = np.diff(x, axis=d) / hd  # interior faces only; walls are zero
            shape = list(x.shape)
            shape[d] += 1
            gfull = np.zeros(shape)
            idx = [slice(None)] * dims
            idx[d] = slice(1, -1)
            gfull[tuple(idx)] = g
            up = [slice(None)] * dims
            lo = [slice(None)] * dims
            up[d] = slice(1, None)
            lo[d] = slice(None, -1)
            out += (gfull[tuple(up)] - gfull[tuple(lo)]) / hd
    return out


def _lap_velocity_component(x, h, periodic, axis):
    """Laplacian of velocity component ``axis``: Dirichlet-zero boundary faces
    along its own axis, odd-reflection ghosts along tangential axes."""
    dims = x.ndim
    lap = np.zeros_like(x)
    for e in range(dims):
        h2 = h[e] * h[e]
        if periodic:
            lap += (np.roll(x, -1, axis=e) - 2.0 * x + np.roll(x, 1, axis=e)) / h2
            continue
        n = x.shape[e]

        def ax(s, axis_=e):
            idx = [slice(None)] * dims
            idx[axis_] = s
            return tuple(idx)

        if e == axis:
            if n < 3:
                continue
            lap[ax(slice(1, -1))] += (
                x[ax(slice(2, None))] - 2.0 * x[ax(slice(1, -1))] + x[ax(slice(None, -2))]
            ) / h2
        else:
            if n == 1:
                lap[ax(0)] += -4.0 * x[ax(0)] / h2
                continue
            lap[ax(slice(1, -1))] += (
                x[ax(slice(2, None))] - 2.0 * x[ax(slice(1, -1))] + x[ax(slice(None, -2))]
            ) / h2
            lap[ax(0)] += (x[ax(1)] - 3.0 * x[ax(0)]) / h2
            lap[ax(-1)] += (x[ax(-2)] - 3.0 * x[ax(-1)]) / h2
    if not periodic:
        lo = [slice(None)] * dims
        hi = [slice(None)] * dims
        lo[axis] = 0
        hi[axis] = -1
        lap[tuple(lo)] = 0.0
        lap[tuple(hi)] = 0.0
    return lap


def apply_operator(op, x, h, periodic, axis=0, alpha=0.0):
    """Apply the named SPD operator to ``x``."""
    if op == "poisson":
        return -_divgrad(x, h, periodic)
    if op == "helmholtz_scalar":
        return x - alpha * _divgrad(x, h, periodic)
    if op == "helmholtz_velocity":
        out = x - alpha * _lap_velocity_component(x, h, periodic, axis)
        if not periodic:
            lo = [slice(None)] * x.ndim
            hi = [slice(None)] * x.ndim
            lo[axis] = 0
            hi[axis] = -1
            out[tuple(lo)] = x[tuple(lo)]
            out[tuple(hi)] = x[tuple(hi)]
        return out
    raise ValueError(f"unknown operator {op!r}")


def cg_solve(op, b, x0, h, periodic, axis, alpha, tol_l2, maxiter):
    """Unpreconditioned conjugate gradients on the named operator.

    Convergence is monitored in the discrete L2 norm (volume-weighted).
    Returns (x, iterations, final_residual_l2).
    """
    vol = 1.0
    for hd in h:
        vol *= hd
    sqvol = np.sqrt(vol)
    x = x0.copy()
    r = b - apply_operator(op, x, h, periodic, axis, alpha)
    p = r.copy()
    rs = float(np.sum(r * r))
    it = 0
    while np.sqrt(rs) * sqvol > tol_l2 and it < maxiter:
        ap = apply_operator(op, p, h, periodic, axis, alpha)
        denom = float(np.sum(p * ap))
        if denom <= 0.0:
            break
        step = rs / denom
        x += step * p
        r -= step * ap
        rs_new = float(np.sum(r * r))
        p = r + (rs_new / rs) * p
        rs = rs_new
        it += 1
    return x, it, float(np.sqrt(rs) * sqvol)
