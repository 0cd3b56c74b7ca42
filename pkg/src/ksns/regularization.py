"""Regularization operators: saturated logarithmic damping of the signal
source, boundary cut-off of the sensitivity, and the resolvent smoothing of
the velocity used in the convective term.

All operators admit ``eps = 0``, which means "no regularization": the
damping becomes the identity, the cut-off is one, and the smoothing reduces
to the Helmholtz projection.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, NumericsError
from .grid import (
    ScalarField,
    VectorField,
    gradient,
    laplacian_velocity,
    vector_inner,
    vector_l2,
)
from .projection import project

SENSITIVITY_KINDS = ("scalar_saturated", "tensor_rotational")


@dataclass(frozen=True)
class PotentialSpec:
    """Gravitational potential: either linear (constant gradient vector) or a
    tabulated cell field whose gradient is taken discretely."""

    kind: str = "gravity"
    vector: tuple = (0.0, -1.0)
    table: ScalarField = None

    def __post_init__(self):
        if self.kind not in ("gravity", "tabulated"):
            raise ConfigError(f"potential kind must be gravity|tabulated, got {self.kind!r}")
        if self.kind == "gravity":
            vec = tuple(float(g) for g in self.vector)
            object.__setattr__(self, "vector", vec)
            if not all(math.isfinite(g) for g in vec):
                raise ConfigError("gravity vector must be finite")
        elif self.table is None:
            raise ConfigError("tabulated potential requires a field")

    def grad_sup(self, grid):
        """Sup norm of the potential gradient (the W^{1,inf} bound)."""
        if self.kind == "gravity":
            return float(max(abs(g) for g in self.vector[: grid.dims]))
        g = gradient(self.table)
        return float(max(np.max(np.abs(c)) for c in g.components))

    def gradient_faces(self, grid):
        """Per-axis face arrays of the potential gradient; wall faces zero."""
        if self.kind == "tabulated":
            return gradient(self.table).components
        comps = []
        for d in range(grid.dims):
            arr = np.full(grid.face_shape(d), self.vector[d])
            if not grid.periodic:
                lo = [slice(None)] * grid.dims
                hi = [slice(None)] * grid.dims
                lo[d] = 0
                hi[d] = -1
                arr[tuple(lo)] = 0.0
                arr[tuple(hi)] = 0.0
            comps.append(arr)
        return comps


@dataclass(frozen=True)
class ModelParams:
    """Physical and regularization parameters of the coupled system."""

    alpha: float = 0.5
    c_s: float = 1.0
    kappa: float = 0.0
    eps: float = 0.0
    phi: PotentialSpec = field(default_factory=PotentialSpec)
    sensitivity_kind: str = "scalar_saturated"
    rotation_angle: float = 0.0
    cutoff_width: float = None  # None: min(4*eps, 0.45) * shortest box length

    def __post_init__(self):
        violations = []
        if not (self.alpha >= 0.0):
            violations.append(f"alpha must be >= 0, got {self.alpha}")
        if not (self.c_s > 0.0):
            violations.append(f"c_s must be > 0, got {self.c_s}")
        if not (self.eps >= 0.0):
            violations.append(f"eps must be >= 0, got {self.eps}")
        if self.sensitivity_kind not in SENSITIVITY_KINDS:
            violations.append(f"sensitivity_kind must be one of {SENSITIVITY_KINDS}")
        if self.cutoff_width is not None and not (self.cutoff_width > 0.0):
            violations.append(f"cutoff_width must be positive, got {self.cutoff_width}")
        if violations:
            raise ConfigError(violations)

    def cutoff_spec(self, grid):
        """Cut-off layer width for this regularization level, or None when
        eps = 0 (no cut-off)."""
        if self.eps == 0.0:
            return None
        if self.cutoff_width is not None:
            return CutoffSpec(self.cutoff_width)
        return CutoffSpec(min(4.0 * self.eps, 0.45) * min(grid.box))


@dataclass(frozen=True)
class CutoffSpec:
    """Boundary layer over which the sensitivity cut-off ramps 0 -> 1."""

    width: float

    def __post_init__(self):
        if not (self.width > 0.0):
            raise ConfigError(f"cutoff width must be positive, got {self.width}")


def f_eps(eps, s):
    """Saturated source damping: log(1 + eps*s)/eps, the identity at eps=0.

    Satisfies 0 <= f_eps(eps, s) <= s and is nondecreasing in s. Tiny
    eps*s switches to the series s(1 - x/2 + x^2/3), which keeps the upper
    bound intact where log1p(x)/eps would lose all precision (subnormal eps).
    """
    s_arr = np.asarray(s, dtype=np.float64)
    if np.any(s_arr < 0.0):
        raise DomainError("f_eps requires s >= 0")
    if eps < 0.0:
        raise DomainError("f_eps requires eps >= 0")
    if eps == 0.0:
        out = s_arr.copy()
    else:
        x = eps * s_arr
        small = x < 1e-8
        with np.errstate(divide="ignore", invalid="ignore"):
            direct = np.log1p(x) / eps
        series = s_arr * (1.0 - x * (0.5 - x / 3.0))
        out = np.where(small, series, direct)
    return float(out) if np.isscalar(s) else out


def f_eps_prime(eps, s):
    """Derivative of the damping: 1/(1 + eps*s), always in [0, 1]."""
    s_arr = np.asarray(s, dtype=np.float64)
    if np.any(s_arr < 0.0):
        raise DomainError("f_eps_prime requires s >= 0")
    if eps < 0.0:
        raise DomainError("f_eps_prime requires eps >= 0")
    out = 1.0 / (1.0 + eps * s_arr)
    return float(out) if np.isscalar(s) else out


def saturation_magnitude(params, n):
    """Sensitivity magnitude c_s * (1 + n)^(-alpha); vectorized over n."""
    n_arr = np.asarray(n, dtype=np.float64)
    if np.any(n_arr < 0.0):
        raise DomainError("sensitivity requires n >= 0")
    out = params.c_s * (1.0 + n_arr) ** (-params.alpha)
    return float(out) if np.isscalar(n) else out


def rotation_matrix(params, dims):
    """Unit-norm direction tensor: identity for the scalar kind, a rotation
    by the configured angle (about the z-axis in 3D) otherwise."""
    if params.sensitivity_kind == "scalar_saturated":
        return np.eye(dims)
    a = params.rotation_angle
    c, s = math.cos(a), math.sin(a)
    if dims == 2:
        return np.array([[c, -s], [s, c]])
    out = np.eye(3)
    out[0, 0] = c
    out[0, 1] = -s
    out[1, 0] = s
    out[1, 1] = c
    return out


def sensitivity(params, x, n, c):
    """Sensitivity tensor at a point: magnitude times identity or rotation.

    The matrix 2-norm equals c_s * (1 + n)^(-alpha), realizing the
    saturation bound; the tensor kind exercises rotational flux."""
    del c  # admissible dependence; this family uses only n
    if n < 0.0:
        raise DomainError("sensitivity requires n >= 0")
    dims = len(np.atleast_1d(np.asarray(x, dtype=np.float64)))
    return saturation_magnitude(params, float(n)) * rotation_matrix(params, dims)


def cutoff_rho(grid, spec):
    """Cell field of the boundary cut-off: 0 in wall-adjacent cells, 1 in the
    interior core, quintic smoothstep ramp in between (C^2)."""
    if spec is None:
        return ScalarField(grid, np.ones(grid.cells))
    if not (spec.width < 0.5 * min(grid.box)):
        raise ConfigError(
            f"cutoff width {spec.width} must be below half the smallest box length"
        )
    if grid.periodic:
        return ScalarField(grid, np.ones(grid.cells))
    mesh = grid.center_mesh()
    dist = None
    for d in range(grid.dims):
        x = mesh[d]
        # distance from the cell's near face to the wall
        dd = np.minimum(x, grid.box[d] - x) - 0.5 * grid.h[d]
        dist = dd if dist is None else np.minimum(dist, dd)
    t = np.clip(dist / spec.width, 0.0, 1.0)
    vals = t * t * t * (t * (6.0 * t - 15.0) + 10.0)
    return ScalarField(grid, vals)


def yosida(grid, eps, w, solver_tol, maxiter=None):
    """Resolvent smoothing (I + eps*A)^{-1} of a velocity field, A being the
    projected negative Laplacian on divergence-free no-slip fields.

    Solved by conjugate gradients on the divergence-free subspace with the
    projection applied inside every operator application; an L2 contraction
    up to solver tolerance.
    """
    if eps < 0.0:
        raise DomainError("yosida requires eps >= 0")
    inner_floor = max(min(solver_tol * 1e-2, 1e-10), 1e-13)

    def _project_scaled(field):
        # inner projections need accuracy relative to their operand: the
        # velocity Laplacian scales like |v|/h^2, beyond any absolute floor
        tol = max(inner_floor, 1e-12 * vector_l2(field))
        out, _, _ = project(field, tol)
        return out

    pw = _project_scaled(w)
    if eps == 0.0:
        return pw
    if maxiter is None:
        maxiter = 100 + 60 * max(grid.cells)

    def apply_a(v):
        plap = _project_scaled(laplacian_velocity(v))
        return VectorField(
            grid, [vc - eps * lc for vc, lc in zip(v.components, plap.components)]
        )

    x = pw.copy()
    r = VectorField(
        grid, [bc - ac for bc, ac in zip(pw.components, apply_a(x).components)]
    )
    p = r.copy()
    rs = vector_inner(r, r)
    it = 0
    while math.sqrt(max(rs, 0.0)) > solver_tol and it < maxiter:
        ap = apply_a(p)
        denom = vector_inner(p, ap)
        if denom <= 0.0:
            break
        step = rs / denom
        for xc, pc in zip(x.components, p.components):
            xc += step * pc
        for rc, ac in zip(r.components, ap.components):
            rc -= step * ac
        rs_new = vector_inner(r, r)
        beta = rs_new / rs
        for pc, rc in zip(p.components, r.components):
            pc *= beta
            pc += rc
        rs = rs_new
        it += 1
    residual = math.sqrt(max(rs, 0.0))
    if residual > solver_tol:
        raise NumericsError(
            f"yosida solve stalled at residual {residual:.3e} (tol {solver_tol:.3e})",
            residual=residual,
            iterations=it,
        )
    return x
