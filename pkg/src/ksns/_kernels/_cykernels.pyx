# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled conjugate-gradient kernels: same operators and algorithm as the
NumPy backend, with the iteration loop in C."""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

NAME = "cython"

cdef int OP_POISSON = 0
cdef int OP_HELM_SCALAR = 1
cdef int OP_HELM_VEL = 2

_OP_CODES = {"poisson": OP_POISSON, "helmholtz_scalar": OP_HELM_SCALAR,
             "helmholtz_velocity": OP_HELM_VEL}


cdef void _divgrad_2d(double[:, ::1] x, double[:, ::1] out,
                      double hx, double hy, bint periodic) noexcept nogil:
    cdef Py_ssize_t nx = x.shape[0], ny = x.shape[1], i, j
    cdef Py_ssize_t im, ip, jm, jp
    cdef double gxp, gxm, gyp, gym
    for i in range(nx):
        for j in range(ny):
            if periodic:
                ip = i + 1 if i + 1 < nx else 0
                im = i - 1 if i > 0 else nx - 1
                jp = j + 1 if j + 1 < ny else 0
                jm = j - 1 if j > 0 else ny - 1
                gxp = (x[ip, j] - x[i, j]) / hx
                gxm = (x[i, j] - x[im, j]) / hx
                gyp = (x[i, jp] - x[i, j]) / hy
                gym = (x[i, j] - x[i, jm]) / hy
            else:
                gxp = (x[i + 1, j] - x[i, j]) / hx if i + 1 < nx else 0.0
                gxm = (x[i, j] - x[i - 1, j]) / hx if i > 0 else 0.0
                gyp = (x[i, j + 1] - x[i, j]) / hy if j + 1 < ny else 0.0
                gym = (x[i, j] - x[i, j - 1]) / hy if j > 0 else 0.0
            out[i, j] = (gxp - gxm) / hx + (gyp - gym) / hy


cdef void _divgrad_3d(double[:, :, ::1] x, double[:, :, ::1] out,
                      double hx, double hy, double hz, bint periodic) noexcept nogil:
    cdef Py_ssize_t nx = x.shape[0], ny = x.shape[1], nz = x.shape[2], i, j, k
    cdef Py_ssize_t im, ip, jm, jp, km, kp
    cdef double gxp, gxm, gyp, gym, gzp, gzm
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                if periodic:
                    ip = i + 1 if i + 1 < nx else 0
                    im = i - 1 if i > 0 else nx - 1
                    jp = j + 1 if j + 1 < ny else 0
                    jm = j - 1 if j > 0 else ny - 1
                    kp = k + 1 if k + 1 < nz else 0
                    km = k - 1 if k > 0 else nz - 1
                    gxp = (x[ip, j, k] - x[i, j, k]) / hx
                    gxm = (x[i, j, k] - x[im, j, k]) / hx
                    gyp = (x[i, jp, k] - x[i, j, k]) / hy
                    gym = (x[i, j, k] - x[i, jm, k]) / hy
                    gzp = (x[i, j, kp] - x[i, j, k]) / hz
                    gzm = (x[i, j, k] - x[i, j, km]) / hz
                else:
                    gxp = (x[i + 1, j, k] - x[i, j, k]) / hx if i + 1 < nx else 0.0
                    gxm = (x[i, j, k] - x[i - 1, j, k]) / hx if i > 0 else 0.0
                    gyp = (x[i, j + 1, k] - x[i, j, k]) / hy if j + 1 < ny else 0.0
                    gym = (x[i, j, k] - x[i, j - 1, k]) / hy if j > 0 else 0.0
                    gzp = (x[i, j, k + 1] - x[i, j, k]) / hz if k + 1 < nz else 0.0
                    gzm = (x[i, j, k] - x[i, j, k - 1]) / hz if k > 0 else 0.0
                out[i, j, k] = (gxp - gxm) / hx + (gyp - gym) / hy + (gzp - gzm) / hz


cdef void _helm_vel_2d(double[:, ::1] x, double[:, ::1] out, double alpha,
                       double hx, double hy, bint periodic, int axis) noexcept nogil:
    cdef Py_ssize_t nx = x.shape[0], ny = x.shape[1], i, j
    cdef Py_ssize_t im, ip, jm, jp
    cdef double lap, cx, cy
    cdef double hx2 = hx * hx, hy2 = hy * hy
    for i in range(nx):
        for j in range(ny):
            if periodic:
                ip = i + 1 if i + 1 < nx else 0
                im = i - 1 if i > 0 else nx - 1
                jp = j + 1 if j + 1 < ny else 0
                jm = j - 1 if j > 0 else ny - 1
                lap = (x[ip, j] - 2.0 * x[i, j] + x[im, j]) / hx2 \
                    + (x[i, jp] - 2.0 * x[i, j] + x[i, jm]) / hy2
                out[i, j] = x[i, j] - alpha * lap
                continue
            if (axis == 0 and (i == 0 or i == nx - 1)) or \
               (axis == 1 and (j == 0 or j == ny - 1)):
                out[i, j] = x[i, j]
                continue
            # x-direction term
            if axis == 0:
                cx = (x[i + 1, j] - 2.0 * x[i, j] + x[i - 1, j]) / hx2 if nx >= 3 else 0.0
            else:
                if nx == 1:
                    cx = -4.0 * x[i, j] / hx2
                elif i == 0:
                    cx = (x[1, j] - 3.0 * x[i, j]) / hx2
                elif i == nx - 1:
                    cx = (x[nx - 2, j] - 3.0 * x[i, j]) / hx2
                else:
                    cx = (x[i + 1, j] - 2.0 * x[i, j] + x[i - 1, j]) / hx2
            # y-direction term
            if axis == 1:
                cy = (x[i, j + 1] - 2.0 * x[i, j] + x[i, j - 1]) / hy2 if ny >= 3 else 0.0
            else:
                if ny == 1:
                    cy = -4.0 * x[i, j] / hy2
                elif j == 0:
                    cy = (x[i, 1] - 3.0 * x[i, j]) / hy2
                elif j == ny - 1:
                    cy = (x[i, ny - 2] - 3.0 * x[i, j]) / hy2
                else:
                    cy = (x[i, j + 1] - 2.0 * x[i, j] + x[i, j - 1]) / hy2
            out[i, j] = x[i, j] - alpha * (cx + cy)


cdef void _helm_vel_3d(double[:, :, ::1] x, double[:, :, ::1] out, double alpha,
                       double hx, double hy, double hz, bint periodic, int axis) noexcept nogil:
    cdef Py_ssize_t nx = x.shape[0], ny = x.shape[1], nz = x.shape[2], i, j, k
    cdef Py_ssize_t im, ip, jm, jp, km, kp
    cdef double lap, cx, cy, cz
    cdef double hx2 = hx * hx, hy2 = hy * hy, hz2 = hz * hz
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                if periodic:
                    ip = i + 1 if i + 1 < nx else 0
                    im = i - 1 if i > 0 else nx - 1
                    jp = j + 1 if j + 1 < ny else 0
                    jm = j - 1 if j > 0 else ny - 1
                    kp = k + 1 if k + 1 < nz else 0
                    km = k - 1 if k > 0 else nz - 1
                    lap = (x[ip, j, k] - 2.0 * x[i, j, k] + x[im, j, k]) / hx2 \
                        + (x[i, jp, k] - 2.0 * x[i, j, k] + x[i, jm, k]) / hy2 \
                        + (x[i, j, kp] - 2.0 * x[i, j, k] + x[i, j, km]) / hz2
                    out[i, j, k] = x[i, j, k] - alpha * lap
                    continue
                if (axis == 0 and (i == 0 or i == nx - 1)) or \
                   (axis == 1 and (j == 0 or j == ny - 1)) or \
                   (axis == 2 and (k == 0 or k == nz - 1)):
                    out[i, j, k] = x[i, j, k]
                    continue
                if axis == 0:
                    cx = (x[i + 1, j, k] - 2.0 * x[i, j, k] + x[i - 1, j, k]) / hx2 if nx >= 3 else 0.0
                else:
                    if nx == 1:
                        cx = -4.0 * x[i, j, k] / hx2
                    elif i == 0:
                        cx = (x[1, j, k] - 3.0 * x[i, j, k]) / hx2
                    elif i == nx - 1:
                        cx = (x[nx - 2, j, k] - 3.0 * x[i, j, k]) / hx2
                    else:
                        cx = (x[i + 1, j, k] - 2.0 * x[i, j, k] + x[i - 1, j, k]) / hx2
                if axis == 1:
                    cy = (x[i, j + 1, k] - 2.0 * x[i, j, k] + x[i, j - 1, k]) / hy2 if ny >= 3 else 0.0
                else:
                    if ny == 1:
                        cy = -4.0 * x[i, j, k] / hy2
                    elif j == 0:
                        cy = (x[i, 1, k] - 3.0 * x[i, j, k]) / hy2
                    elif j == ny - 1:
                        cy = (x[i, ny - 2, k] - 3.0 * x[i, j, k]) / hy2
                    else:
                        cy = (x[i, j + 1, k] - 2.0 * x[i, j, k] + x[i, j - 1, k]) / hy2
                if axis == 2:
                    cz = (x[i, j, k + 1] - 2.0 * x[i, j, k] + x[i, j, k - 1]) / hz2 if nz >= 3 else 0.0
                else:
                    if nz == 1:
                        cz = -4.0 * x[i, j, k] / hz2
                    elif k == 0:
                        cz = (x[i, j, 1] - 3.0 * x[i, j, k]) / hz2
                    elif k == nz - 1:
                        cz = (x[i, j, nz - 2] - 3.0 * x[i, j, k]) / hz2
                    else:
                        cz = (x[i, j, k + 1] - 2.0 * x[i, j, k] + x[i, j, k - 1]) / hz2
                out[i, j, k] = x[i, j, k] - alpha * (cx + cy + cz)


cdef void _apply_flat(int op, double[::1] xf, double[::1] outf, object shape,
                      double hx, double hy, double hz, bint periodic,
                      int axis, double alpha):
    cdef Py_ssize_t n = xf.shape[0], i
    cdef double[:, ::1] x2, o2
    cdef double[:, :, ::1] x3, o3
    xa = np.asarray(xf).reshape(shape)
    oa = np.asarray(outf).reshape(shape)
    if len(shape) == 2:
        x2 = xa
        o2 = oa
        if op == OP_POISSON:
            _divgrad_2d(x2, o2, hx, hy, periodic)
            for i in range(n):
                outf[i] = -outf[i]
        elif op == OP_HELM_SCALAR:
            _divgrad_2d(x2, o2, hx, hy, periodic)
            for i in range(n):
                outf[i] = xf[i] - alpha * outf[i]
        else:
            _helm_vel_2d(x2, o2, alpha, hx, hy, periodic, axis)
    else:
        x3 = xa
        o3 = oa
        if op == OP_POISSON:
            _divgrad_3d(x3, o3, hx, hy, hz, periodic)
            for i in range(n):
                outf[i] = -outf[i]
        elif op == OP_HELM_SCALAR:
            _divgrad_3d(x3, o3, hx, hy, hz, periodic)
            for i in range(n):
                outf[i] = xf[i] - alpha * outf[i]
        else:
            _helm_vel_3d(x3, o3, alpha, hx, hy, hz, periodic, axis)


def apply_operator(op, x, h, periodic, axis=0, alpha=0.0):
    """Apply the named SPD operator to ``x`` (2D or 3D float64 array)."""
    code = _OP_CODES[op]
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(x)
    hx = float(h[0])
    hy = float(h[1])
    hz = float(h[2]) if len(h) > 2 else 1.0
    _apply_flat(code, x.reshape(-1), out.reshape(-1), x.shape,
                hx, hy, hz, bool(periodic), int(axis), float(alpha))
    return out


def cg_solve(op, b, x0, h, periodic, axis, alpha, tol_l2, maxiter):
    """Conjugate gradients with the full iteration loop in C.

    Same algorithm and convergence criterion (discrete L2 residual) as the
    NumPy backend. Returns (x, iterations, final_residual_l2).
    """
    code = _OP_CODES[op]
    b = np.ascontiguousarray(b, dtype=np.float64)
    shape = b.shape
    cdef double hx = float(h[0])
    cdef double hy = float(h[1])
    cdef double hz = float(h[2]) if len(h) > 2 else 1.0
    cdef double vol = 1.0
    for hd in h:
        vol *= float(hd)
    cdef double sqvol = sqrt(vol)
    cdef bint per = bool(periodic)
    cdef int ax = int(axis)
    cdef double al = float(alpha)
    cdef double tol = float(tol_l2)
    cdef int mx = int(maxiter)
    cdef int opc = code

    x_arr = np.array(x0, dtype=np.float64, copy=True).reshape(-1)
    b_flat = b.reshape(-1)
    r_arr = np.empty_like(b_flat)
    p_arr = np.empty_like(b_flat)
    ap_arr = np.empty_like(b_flat)

    cdef double[::1] xv = x_arr
    cdef double[::1] bv = b_flat
    cdef double[::1] rv = r_arr
    cdef double[::1] pv = p_arr
    cdef double[::1] apv = ap_arr
    cdef Py_ssize_t n = xv.shape[0], i
    cdef double rs = 0.0, rs_new, denom, step, beta
    cdef int it = 0

    _apply_flat(opc, xv, apv, shape, hx, hy, hz, per, ax, al)
    for i in range(n):
        rv[i] = bv[i] - apv[i]
        pv[i] = rv[i]
        rs += rv[i] * rv[i]

    while sqrt(rs) * sqvol > tol and it < mx:
        _apply_flat(opc, pv, apv, shape, hx, hy, hz, per, ax, al)
        denom = 0.0
        for i in range(n):
            denom += pv[i] * apv[i]
        if denom <= 0.0:
            break
        step = rs / denom
        rs_new = 0.0
        for i in range(n):
            xv[i] += step * pv[i]
            rv[i] -= step * apv[i]
            rs_new += rv[i] * rv[i]
        beta = rs_new / rs
        for i in range(n):
            pv[i] = rv[i] + beta * pv[i]
        rs = rs_new
        it += 1

    return x_arr.reshape(shape), it, sqrt(rs) * sqvol
