"""One time step of the cell-density and signal equations.

The density equation is advanced in conservative flux form: upwinded
advection by the (divergence-free) velocity, upwinded chemotactic drift
down the damped sensitivity times the signal gradient, and diffusion either
folded into the same explicit flux or solved implicitly. The signal
equation adds its decay/production reaction through an exact integrating
factor, so spatially uniform states decay exactly.

Positivity is structural, not repaired: first-order upwinding plus the
time-step bound keeps every explicit update a convex combination, implicit
diffusion is an M-matrix solve, and the reaction is a convex blend of
nonnegative terms. A negative value is a bug and raises.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as kernels
from .errors import CFLError, ConfigError, NumericsError, StateError
from .grid import (
    ScalarField,
    VectorField,
    divergence,
    gradient,
    scalar_l2,
    scalar_to_faces,
    upwind_to_faces,
)
from .regularization import (
    cutoff_rho,
    f_eps,
    f_eps_prime,
    rotation_matrix,
    saturation_magnitude,
)

DIFFUSION_MODES = ("explicit", "implicit")
ADVECTION_SCHEMES = ("upwind1", "muscl")


@dataclass(frozen=True)
class TransportConfig:
    dt: float = 1e-3
    diffusion_mode: str = "implicit"
    advection_scheme: str = "upwind1"
    chemotaxis_limiter: str = "on"
    dt_max: float = 1.0
    implicit_rtol: float = 1e-10

    def __post_init__(self):
        violations = []
        if not (self.dt > 0.0):
            violations.append(f"dt must be positive, got {self.dt}")
        if self.diffusion_mode not in DIFFUSION_MODES:
            violations.append(f"diffusion_mode must be one of {DIFFUSION_MODES}")
        if self.advection_scheme not in ADVECTION_SCHEMES:
            violations.append(f"advection_scheme must be one of {ADVECTION_SCHEMES}")
        if self.chemotaxis_limiter not in ("on", "off"):
            violations.append("chemotaxis_limiter must be 'on' or 'off'")
        if not (self.dt_max > 0.0):
            violations.append(f"dt_max must be positive, got {self.dt_max}")
        if violations:
            raise ConfigError(violations)


def _faces_to_cells_max_abs(comp, grid, axis):
    """Per-cell max of |face value| over the two faces along ``axis``."""
    a = np.abs(comp)
    if grid.periodic:
        return np.maximum(a, np.roll(a, -1, axis=axis))
    lo = [slice(None)] * grid.dims
    hi = [slice(None)] * grid.dims
    lo[axis] = slice(None, -1)
    hi[axis] = slice(1, None)
    return np.maximum(a[tuple(lo)], a[tuple(hi)])


def _faces_mean_to_cells(comp, grid, axis):
    if grid.periodic:
        return 0.5 * (comp + np.roll(comp, -1, axis=axis))
    lo = [slice(None)] * grid.dims
    hi = [slice(None)] * grid.dims
    lo[axis] = slice(None, -1)
    hi[axis] = slice(1, None)
    return 0.5 * (comp[tuple(lo)] + comp[tuple(hi)])


def _zero_wall_faces(arr, grid, axis):
    if grid.periodic:
        return arr
    lo = [slice(None)] * grid.dims
    hi = [slice(None)] * grid.dims
    lo[axis] = 0
    hi[axis] = -1
    arr[tuple(lo)] = 0.0
    arr[tuple(hi)] = 0.0
    return arr


def chem_direction_faces(c, params):
    """Per-axis face arrays of (R grad c)_d, R the sensitivity direction
    tensor. Determines both the drift direction (its sign, independent of
    the density) and the drift magnitude."""
    grid = c.grid
    gc = gradient(c).components
    rot = rotation_matrix(params, grid.dims)
    if np.allclose(rot, np.eye(grid.dims)):
        return list(gc)
    out = []
    for d in range(grid.dims):
        acc = rot[d, d] * gc[d]
        for e in range(grid.dims):
            if e == d or rot[d, e] == 0.0:
                continue
            cells = _faces_mean_to_cells(gc[e], grid, e)
            acc = acc + rot[d, e] * scalar_to_faces(ScalarField(grid, cells), d)
        out.append(acc)
    return out


def chemotactic_flux(n, c, params, rho, limiter="on"):
    """Face flux of the chemotactic drift term.

    Per face: (upwinded n) * damping'(n_up) * rho * c_s (1+n_up)^(-alpha)
    * (R grad c)_d, zero across walls. The per-face magnitude is bounded by
    c_s * n_up * (1+n_up)^(-alpha) * |grad c| by construction.
    """
    grid = n.grid
    if np.min(n.values) < 0.0:
        raise StateError("chemotactic_flux requires nonnegative density")
    dirs = chem_direction_faces(c, params)
    comps = []
    for d in range(grid.dims):
        g = dirs[d]
        if limiter == "on":
            n_face = upwind_to_faces(n, g, d)
        else:
            n_face = scalar_to_faces(n, d)
        rho_face = scalar_to_faces(rho, d)
        flux = (
            n_face
            * f_eps_prime(params.eps, n_face)
            * rho_face
            * saturation_magnitude(params, n_face)
            * g
        )
        comps.append(_zero_wall_faces(flux, grid, d))
    return VectorField(grid, comps)


def _minmod(a, b):
    out = np.where(np.sign(a) == np.sign(b), np.where(np.abs(a) < np.abs(b), a, b), 0.0)
    return np.where(a * b > 0.0, out, 0.0)


def _muscl_states(f, grid, axis):
    """Left/right face states from minmod-limited linear reconstruction."""
    vals = f.values
    if grid.periodic:
        dm = vals - np.roll(vals, 1, axis=axis)
        dp = np.roll(vals, -1, axis=axis) - vals
        slope = _minmod(dm, dp)
        left = np.roll(vals + 0.5 * slope, 1, axis=axis)
        right = vals - 0.5 * slope
        return left, right
    dm = np.zeros_like(vals)
    dp = np.zeros_like(vals)
    sl = [slice(None)] * grid.dims

    def ax(s):
        idx = list(sl)
        idx[axis] = s
        return tuple(idx)

    dm[ax(slice(1, None))] = np.diff(vals, axis=axis)
    dp[ax(slice(None, -1))] = np.diff(vals, axis=axis)
    slope = _minmod(dm, dp)
    shape = grid.face_shape(axis)
    left = np.zeros(shape)
    right = np.zeros(shape)
    left[ax(slice(1, None))] = vals + 0.5 * slope
    right[ax(slice(None, -1))] = vals - 0.5 * slope
    return left, right


def advective_flux(f, u, scheme="upwind1"):
    """Conservative advective face flux of a cell field by a face velocity."""
    grid = f.grid
    comps = []
    for d in range(grid.dims):
        vel = u.components[d]
        if scheme == "upwind1":
            f_face = upwind_to_faces(f, vel, d)
            flux = vel * f_face
        else:
            left, right = _muscl_states(f, grid, d)
            flux = np.maximum(vel, 0.0) * left + np.minimum(vel, 0.0) * right
        comps.append(_zero_wall_faces(flux, grid, d))
    return VectorField(grid, comps)


def _explicit_rate(state, params, cfg):
    """Per-cell sum of explicit outflow rates: the reciprocal of the
    positivity-preserving time step. The chemotactic speed bound uses
    c_s |R grad c|, since the damping and saturation factors are <= 1."""
    grid = state.n.grid
    rate = np.zeros(grid.cells)
    adv_factor = 2.0 if cfg.advection_scheme == "muscl" else 1.0
    for d in range(grid.dims):
        rate += adv_factor * _faces_to_cells_max_abs(state.u.components[d], grid, d) / grid.h[d]
    dirs = chem_direction_faces(state.c, params)
    for d in range(grid.dims):
        chi = params.c_s * np.abs(dirs[d])
        rate += _faces_to_cells_max_abs(chi, grid, d) / grid.h[d]
    if cfg.diffusion_mode == "explicit":
        rate += sum(2.0 / (h * h) for h in grid.h)
    return rate


def stable_dt(state, params, cfg):
    """Largest positivity-preserving time step for the explicit terms.

    Combines the advective bound h/|u|, the chemotactic bound h/(c_s |grad c|)
    and, in explicit mode, the diffusive bound h^2/(2 dims) harmonically, so
    the bound is safe when several mechanisms act at once. Unconstrained
    states return dt_max.
    """
    rate = _explicit_rate(state, params, cfg)
    peak = float(np.max(rate))
    if peak <= 0.0:
        return cfg.dt_max
    return min(1.0 / peak, cfg.dt_max)


def _implicit_diffusion(field, dt, cfg):
    """Solve (I - dt*Lap) x = b with mirror-ghost walls; CG from x0 = b keeps
    the discrete mass of b exactly (up to rounding)."""
    grid = field.grid
    b = field.values
    tol = cfg.implicit_rtol * max(scalar_l2(field), 1e-300)
    x, iters, res = kernels.cg_solve(
        "helmholtz_scalar", b, b, grid.h, grid.periodic, 0, dt,
        tol, 200 + 20 * max(grid.cells),
    )
    if res > tol:
        raise NumericsError(
            f"implicit diffusion stalled at residual {res:.3e}", residual=res, iterations=iters
        )
    return ScalarField(grid, x)


def _check_cfl(dt, state, params, cfg):
    rate = _explicit_rate(state, params, cfg)
    peak = float(np.max(rate))
    if dt * peak > 1.0:
        raise CFLError(
            f"dt={dt:.3e} exceeds the positivity bound {1.0 / peak:.3e}",
            suggested_dt=0.4 / peak,
        )


def step_n(state, params, cfg, rho=None, forcing=None, dt=None):
    """Advance the cell density by one conservative step.

    Returns the new density field. Mass is conserved to rounding; with the
    limiter on and dt within the stability bound the result is nonnegative.
    """
    grid = state.n.grid
    if dt is None:
        dt = cfg.dt
    if rho is None:
        rho = cutoff_rho(grid, params.cutoff_spec(grid))
    if np.min(state.n.values) < 0.0:
        raise StateError("step_n: density is negative before the step")
    _check_cfl(dt, state, params, cfg)

    flux = advective_flux(state.n, state.u, cfg.advection_scheme)
    chem = chemotactic_flux(state.n, state.c, params, rho, cfg.chemotaxis_limiter)
    for fc, cc in zip(flux.components, chem.components):
        fc += cc
    if cfg.diffusion_mode == "explicit":
        gn = gradient(state.n)
        for fc, gc in zip(flux.components, gn.components):
            fc -= gc
    new_vals = state.n.values - dt * divergence(flux).values
    if forcing is not None:
        new_vals = new_vals + dt * forcing
    out = ScalarField(grid, new_vals)
    if cfg.diffusion_mode == "implicit":
        out = _implicit_diffusion(out, dt, cfg)
    out.check_finite("density")
    if cfg.chemotaxis_limiter == "on" and forcing is None and np.min(out.values) < 0.0:
        raise StateError(
            f"step_n produced a negative density (min {np.min(out.values):.3e}); "
            "this is a scheme bug, not a state to repair"
        )
    return out


def step_c(state, params, cfg, rho=None, forcing=None, dt=None):
    """Advance the signal concentration by one step.

    Advection and diffusion as for the density; the reaction (decay plus
    damped production from the density) integrates exactly over the step,
    so uniform states follow the scalar ODE to machine precision.
    """
    grid = state.c.grid
    if dt is None:
        dt = cfg.dt
    if rho is None:
        rho = cutoff_rho(grid, params.cutoff_spec(grid))
    if np.min(state.c.values) < 0.0:
        raise StateError("step_c: concentration is negative before the step")
    _check_cfl(dt, state, params, cfg)

    flux = advective_flux(state.c, state.u, cfg.advection_scheme)
    if cfg.diffusion_mode == "explicit":
        gc = gradient(state.c)
        for fc, g in zip(flux.components, gc.components):
            fc -= g
    work = ScalarField(grid, state.c.values - dt * divergence(flux).values)
    if cfg.diffusion_mode == "implicit":
        work = _implicit_diffusion(work, dt, cfg)
    source = f_eps(params.eps, state.n.values)
    if forcing is not None:
        source = source + forcing
    decay = math.exp(-dt)
    out = ScalarField(grid, decay * work.values + (1.0 - decay) * source)
    out.check_finite("concentration")
    if forcing is None and np.min(out.values) < 0.0:
        raise StateError(
            f"step_c produced a negative concentration (min {np.min(out.values):.3e})"
        )
    return out
