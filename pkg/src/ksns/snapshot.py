"""Binary state snapshots.

Layout: a 64-byte little-endian header (magic ``KSNS``, version u32, dims
u32, cells u32 x 3, box lengths f64 x 3, time f64, then two BC flag bytes
in the reserved tail), followed by row-major float64 payloads for the cell
density, signal concentration, velocity components, and pressure, in that
order. Round-trips are bit-exact, which the restart-equivalence contract
relies on.
"""

import struct

import numpy as np

from .errors import ConfigError
from .grid import GridSpec, ScalarField, VectorField
from .state import SimState

MAGIC = b"KSNS"
VERSION = 1
_HEADER = struct.Struct("<4sII3I3ddBB6x")

_BC_SCALAR_CODE = {"neumann": 0, "periodic": 1}
_BC_VELOCITY_CODE = {"no_slip": 0, "periodic": 1}
_BC_SCALAR_NAME = {v: k for k, v in _BC_SCALAR_CODE.items()}
_BC_VELOCITY_NAME = {v: k for k, v in _BC_VELOCITY_CODE.items()}

assert _HEADER.size == 64


def write_snapshot(state, path):
    grid = state.n.grid
    cells = list(grid.cells) + [0] * (3 - grid.dims)
    box = list(grid.box) + [0.0] * (3 - grid.dims)
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        grid.dims,
        *cells,
        *box,
        state.t,
        _BC_SCALAR_CODE[grid.bc_scalar],
        _BC_VELOCITY_CODE[grid.bc_velocity],
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(state.n.values.astype("<f8").tobytes())
        fh.write(state.c.values.astype("<f8").tobytes())
        for comp in state.u.components:
            fh.write(comp.astype("<f8").tobytes())
        fh.write(state.p.values.astype("<f8").tobytes())


def _read_header(fh):
    raw = fh.read(_HEADER.size)
    if len(raw) != _HEADER.size:
        raise ConfigError("snapshot truncated: short header")
    (magic, version, dims, c0, c1, c2, b0, b1, b2, t, bcs, bcv) = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise ConfigError(f"bad snapshot magic {magic!r}")
    if version != VERSION:
        raise ConfigError(f"unsupported snapshot version {version}")
    if dims not in (2, 3):
        raise ConfigError(f"bad snapshot dims {dims}")
    cells = (c0, c1, c2)[:dims]
    box = (b0, b1, b2)[:dims]
    if bcs not in _BC_SCALAR_NAME or bcv not in _BC_VELOCITY_NAME:
        raise ConfigError("bad snapshot boundary-condition flags")
    grid = GridSpec(dims, cells, box, _BC_SCALAR_NAME[bcs], _BC_VELOCITY_NAME[bcv])
    return grid, t


def _read_array(fh, shape):
    count = int(np.prod(shape))
    raw = fh.read(count * 8)
    if len(raw) != count * 8:
        raise ConfigError("snapshot truncated: short payload")
    return np.frombuffer(raw, dtype="<f8").reshape(shape).astype(np.float64)


def read_snapshot(path):
    with open(path, "rb") as fh:
        grid, t = _read_header(fh)
        n = ScalarField(grid, _read_array(fh, grid.cells))
        c = ScalarField(grid, _read_array(fh, grid.cells))
        comps = [_read_array(fh, grid.face_shape(d)) for d in range(grid.dims)]
        p = ScalarField(grid, _read_array(fh, grid.cells))
        if fh.read(1):
            raise ConfigError("snapshot has trailing bytes")
    return SimState(n=n, c=c, u=VectorField(grid, comps), p=p, t=t, step=0)


def verify_snapshot(path):
    """Validate a snapshot and return a summary dict."""
    state = read_snapshot(path)
    grid = state.n.grid
    fields = {
        "n": state.n.values,
        "c": state.c.values,
        "p": state.p.values,
        **{f"u{d}": comp for d, comp in enumerate(state.u.components)},
    }
    summary = {
        "dims": grid.dims,
        "cells": list(grid.cells),
        "box": list(grid.box),
        "bc_scalar": grid.bc_scalar,
        "bc_velocity": grid.bc_velocity,
        "time": state.t,
        "finite": all(bool(np.isfinite(v).all()) for v in fields.values()),
        "min_n": float(np.min(state.n.values)),
        "min_c": float(np.min(state.c.values)),
    }
    return summary
