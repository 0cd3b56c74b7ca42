"""Staggered (MAC) rectangular grid, fields, and discrete calculus operators.

Scalars (cell densities, signal concentration, pressure) live at cell
centers; velocity components live on the faces normal to their axis.
Axis ``d`` of a wall-bounded grid has ``cells[d] + 1`` faces (the two
outermost are boundary faces); a periodic axis has ``cells[d]`` faces,
face ``i`` sitting between cells ``i-1 (mod n)`` and ``i``.

Boundary conventions:

* scalar ``neumann``: ghost cells mirror the interior, so boundary-face
  gradients vanish and the discrete Laplacian conserves integrals;
* velocity ``no_slip``: normal components on boundary faces are pinned to
  zero, tangential ghosts reflect oddly (wall value zero);
* ``periodic``: everything wraps.

All reductions use NumPy's deterministic pairwise summation, so repeated
runs are bit-identical.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError

BC_SCALAR = ("neumann", "periodic")
BC_VELOCITY = ("no_slip", "periodic")


@dataclass(frozen=True)
class GridSpec:
    """Discretization of the box domain: sizes, resolution, BC flavor."""

    dims: int
    cells: tuple
    box: tuple
    bc_scalar: str = "neumann"
    bc_velocity: str = "no_slip"

    def __post_init__(self):
        violations = []
        if self.dims not in (2, 3):
            violations.append(f"dims must be 2 or 3, got {self.dims}")
        cells = tuple(int(c) for c in self.cells)
        box = tuple(float(b) for b in self.box)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "box", box)
        if len(cells) != self.dims:
            violations.append(f"cells has {len(cells)} entries for dims={self.dims}")
        if len(box) != self.dims:
            violations.append(f"box has {len(box)} entries for dims={self.dims}")
        if any(c < 1 for c in cells):
            violations.append(f"cells must be positive, got {cells}")
        if any(not (b > 0) for b in box):
            violations.append(f"box lengths must be positive, got {box}")
        if self.bc_scalar not in BC_SCALAR:
            violations.append(f"bc_scalar must be one of {BC_SCALAR}")
        if self.bc_velocity not in BC_VELOCITY:
            violations.append(f"bc_velocity must be one of {BC_VELOCITY}")
        # Periodic and wall conditions may not be mixed on an axis; BC flavor
        # is global per field kind, so the two kinds must agree on wrapping.
        if (self.bc_scalar == "periodic") != (self.bc_velocity == "periodic"):
            violations.append(
                "periodic and wall boundary conditions may not be mixed: "
                f"bc_scalar={self.bc_scalar}, bc_velocity={self.bc_velocity}"
            )
        if violations:
            raise ConfigError(violations)

    @property
    def periodic(self):
        return self.bc_scalar == "periodic"

    @property
    def h(self):
        return tuple(b / c for b, c in zip(self.box, self.cells))

    @property
    def cell_volume(self):
        vol = 1.0
        for hd in self.h:
            vol *= hd
        return vol

    @property
    def volume(self):
        vol = 1.0
        for b in self.box:
            vol *= b
        return vol

    def face_shape(self, axis):
        shape = list(self.cells)
        if not self.periodic:
            shape[axis] += 1
        return tuple(shape)

    def cell_centers(self, axis):
        """1D coordinates of cell centers along ``axis``."""
        h = self.h[axis]
        return (np.arange(self.cells[axis]) + 0.5) * h

    def face_positions(self, axis):
        """1D coordinates of the faces of velocity component ``axis``."""
        h = self.h[axis]
        n = self.face_shape(axis)[axis]
        return np.arange(n) * h

    def center_mesh(self):
        """Cell-center coordinate arrays, broadcastable to the cell shape."""
        return np.meshgrid(*[self.cell_centers(d) for d in range(self.dims)], indexing="ij")


@dataclass
class ScalarField:
    """Cell-centered scalar on a grid; values stored row-major."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.cells:
            raise ConfigError(
                f"scalar values shape {self.values.shape} does not match grid cells {self.grid.cells}"
            )

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.cells))

    @classmethod
    def full(cls, grid, value):
        return cls(grid, np.full(grid.cells, float(value)))

    @classmethod
    def from_function(cls, grid, fn):
        """Sample ``fn(*coords)`` at cell centers."""
        return cls(grid, np.asarray(fn(*grid.center_mesh()), dtype=np.float64))

    def copy(self):
        return ScalarField(self.grid, self.values.copy())

    def check_finite(self, what="scalar field"):
        if not np.isfinite(self.values).all():
            raise DomainError(f"{what} contains non-finite values")
        return self


@dataclass
class VectorField:
    """Face-centered vector field: component ``d`` lives on faces normal to axis ``d``."""

    grid: GridSpec
    components: list = field(default_factory=list)

    def __post_init__(self):
        comps = []
        for d, comp in enumerate(self.components):
            arr = np.ascontiguousarray(comp, dtype=np.float64)
            want = self.grid.face_shape(d)
            if arr.shape != want:
                raise ConfigError(
                    f"component {d} shape {arr.shape} does not match face shape {want}"
                )
            comps.append(arr)
        if len(comps) != self.grid.dims:
            raise ConfigError(
                f"vector field has {len(comps)} components for dims={self.grid.dims}"
            )
        self.components = comps

    @classmethod
    def zeros(cls, grid):
        return cls(grid, [np.zeros(grid.face_shape(d)) for d in range(grid.dims)])

    def copy(self):
        return VectorField(self.grid, [c.copy() for c in self.components])

    def check_finite(self, what="vector field"):
        for comp in self.components:
            if not np.isfinite(comp).all():
                raise DomainError(f"{what} contains non-finite values")
        return self

    def enforce_no_slip(self):
        """Pin boundary-face normal components to exactly zero (wall grids)."""
        if self.grid.periodic:
            return self
        for d, comp in enumerate(self.components):
            lo = [slice(None)] * self.grid.dims
            hi = [slice(None)] * self.grid.dims
            lo[d] = 0
            hi[d] = -1
            comp[tuple(lo)] = 0.0
            comp[tuple(hi)] = 0.0
        return self


def integrate(f):
    """Discrete integral over the domain: midpoint rule, Sigma f_i * prod(h)."""
    f.check_finite("integrand")
    return float(np.sum(f.values)) * f.grid.cell_volume


def gradient(f):
    """Face-centered gradient; homogeneous Neumann walls get zero normal gradient."""
    f.check_finite("gradient input")
    grid = f.grid
    vals = f.values
    comps = []
    for d in range(grid.dims):
        h = grid.h[d]
        if grid.periodic:
            g = (vals - np.roll(vals, 1, axis=d)) / h
        else:
            g = np.zeros(grid.face_shape(d))
            interior = [slice(None)] * grid.dims
            interior[d] = slice(1, -1)
            g[tuple(interior)] = np.diff(vals, axis=d) / h
        comps.append(g)
    return VectorField(grid, comps)


def divergence(v):
    """Per-cell flux balance Sigma_d (v_{d,+} - v_{d,-}) / h_d."""
    v.check_finite("divergence input")
    grid = v.grid
    out = np.zeros(grid.cells)
    for d in range(grid.dims):
        h = grid.h[d]
        comp = v.components[d]
        if grid.periodic:
            out += (np.roll(comp, -1, axis=d) - comp) / h
        else:
            upper = [slice(None)] * grid.dims
            lower = [slice(None)] * grid.dims
            upper[d] = slice(1, None)
            lower[d] = slice(None, -1)
            out += (comp[tuple(upper)] - comp[tuple(lower)]) / h
    return ScalarField(grid, out)


def laplacian(f):
    """Discrete Laplacian, defined as divergence(gradient(f)) so the
    operator-composition identity holds cell-exactly by construction."""
    return divergence(gradient(f))


def laplacian_velocity(v):
    """Component-wise velocity Laplacian.

    No-slip walls: boundary faces of each component are Dirichlet-zero along
    the component's own axis and reflect oddly (ghost = -interior) along
    tangential axes, so the wall velocity is zero to second order.
    """
    v.check_finite("velocity Laplacian input")
    grid = v.grid
    out = []
    for d in range(grid.dims):
        comp = v.components[d]
        lap = np.zeros_like(comp)
        for e in range(grid.dims):
            h2 = grid.h[e] * grid.h[e]
            if grid.periodic:
                lap += (np.roll(comp, -1, axis=e) - 2.0 * comp + np.roll(comp, 1, axis=e)) / h2
            elif e == d:
                n = comp.shape[e]
                if n < 3:
                    continue
                sl = [slice(None)] * grid.dims

                def ax(s, axis=e):
                    idx = list(sl)
                    idx[axis] = s
                    return tuple(idx)

                lap[ax(slice(1, -1))] += (
                    comp[ax(slice(2, None))]
                    - 2.0 * comp[ax(slice(1, -1))]
                    + comp[ax(slice(None, -2))]
                ) / h2
            else:
                n = comp.shape[e]
                sl = [slice(None)] * grid.dims

                def ax(s, axis=e):
                    idx = list(sl)
                    idx[axis] = s
                    return tuple(idx)

                if n == 1:
                    # single tangential cell: both ghosts are odd reflections
                    lap[ax(0)] += -4.0 * comp[ax(0)] / h2
                    continue
                lap[ax(slice(1, -1))] += (
                    comp[ax(slice(2, None))]
                    - 2.0 * comp[ax(slice(1, -1))]
                    + comp[ax(slice(None, -2))]
                ) / h2
                lap[ax(0)] += (comp[ax(1)] - 3.0 * comp[ax(0)]) / h2
                lap[ax(-1)] += (comp[ax(-2)] - 3.0 * comp[ax(-1)]) / h2
        if not grid.periodic:
            lo = [slice(None)] * grid.dims
            hi = [slice(None)] * grid.dims
            lo[d] = 0
            hi[d] = -1
            lap[tuple(lo)] = 0.0
            lap[tuple(hi)] = 0.0
        out.append(lap)
    return VectorField(grid, out)


def scalar_inner(a, b):
    """L2 inner product of two cell fields: Sigma a_i b_i vol."""
    return float(np.sum(a.values * b.values)) * a.grid.cell_volume


def scalar_l2(f):
    return float(np.sqrt(np.sum(f.values * f.values) * f.grid.cell_volume))


def vector_inner(a, b):
    """Face-weighted L2 inner product; wall boundary faces carry zero values
    for every field produced by this package, so plain face sums apply."""
    acc = 0.0
    for ca, cb in zip(a.components, b.components):
        acc += float(np.sum(ca * cb))
    return acc * a.grid.cell_volume


def vector_l2(v):
    return float(np.sqrt(max(vector_inner(v, v), 0.0)))


def scalar_to_faces(f, axis):
    """Arithmetic mean of the two cells adjacent to each face along ``axis``.
    Wall boundary faces get the single adjacent cell value."""
    grid = f.grid
    vals = f.values
    if grid.periodic:
        return 0.5 * (vals + np.roll(vals, 1, axis=axis))
    out = np.zeros(grid.face_shape(axis))
    interior = [slice(None)] * grid.dims
    interior[axis] = slice(1, -1)
    lo = [slice(None)] * grid.dims
    hi = [slice(None)] * grid.dims
    lo[axis] = 0
    hi[axis] = -1
    first = [slice(None)] * grid.dims
    last = [slice(None)] * grid.dims
    first[axis] = 0
    last[axis] = -1
    a = [slice(None)] * grid.dims
    b = [slice(None)] * grid.dims
    a[axis] = slice(None, -1)
    b[axis] = slice(1, None)
    out[tuple(interior)] = 0.5 * (vals[tuple(a)] + vals[tuple(b)])
    out[tuple(lo)] = vals[tuple(first)]
    out[tuple(hi)] = vals[tuple(last)]
    return out


def upwind_to_faces(f, face_sign, axis):
    """Upwind cell value per face along ``axis``: the left cell where
    ``face_sign >= 0``, the right cell otherwise."""
    grid = f.grid
    vals = f.values
    if grid.periodic:
        left = np.roll(vals, 1, axis=axis)
        right = vals
        return np.where(face_sign >= 0.0, left, right)
    out = np.zeros(grid.face_shape(axis))
    interior = [slice(None)] * grid.dims
    interior[axis] = slice(1, -1)
    a = [slice(None)] * grid.dims
    b = [slice(None)] * grid.dims
    a[axis] = slice(None, -1)
    b[axis] = slice(1, None)
    sign_int = face_sign[tuple(interior)] if face_sign.shape == out.shape else face_sign
    out[tuple(interior)] = np.where(sign_int >= 0.0, vals[tuple(a)], vals[tuple(b)])
    # boundary faces: flux is zeroed by the caller, value immaterial
    lo = [slice(None)] * grid.dims
    hi = [slice(None)] * grid.dims
    lo[axis] = 0
    hi[axis] = -1
    first = [slice(None)] * grid.dims
    last = [slice(None)] * grid.dims
    first[axis] = 0
    last[axis] = -1
    out[tuple(lo)] = vals[tuple(first)]
    out[tuple(hi)] = vals[tuple(last)]
    return out
