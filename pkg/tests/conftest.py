import numpy as np
import pytest

from ksns.grid import GridSpec, VectorField


@pytest.fixture
def grid2d():
    return GridSpec(2, (16, 16), (1.0, 1.0))


@pytest.fixture
def grid2d_periodic():
    return GridSpec(2, (16, 16), (1.0, 1.0), "periodic", "periodic")


def stream_function_velocity(grid, fn=None):
    """Discretely divergence-free no-slip velocity from a corner stream
    function vanishing on the boundary."""
    nx, ny = grid.cells
    hx, hy = grid.h
    xs = np.arange(nx + 1) * hx
    ys = np.arange(ny + 1) * hy
    X, Y = np.meshgrid(xs / grid.box[0], ys / grid.box[1], indexing="ij")
    psi = fn(X, Y) if fn is not None else np.sin(np.pi * X) ** 2 * np.sin(np.pi * Y) ** 2
    ux = (psi[:, 1:] - psi[:, :-1]) / hy
    uy = -(psi[1:, :] - psi[:-1, :]) / hx
    return VectorField(grid, [ux, uy])


def random_periodic_divfree(grid, seed=0):
    """Divergence-free periodic velocity from a random corner stream function:
    face (i, j) of the x-component spans corners (i, j) and (i, j+1)."""
    rng = np.random.default_rng(seed)
    hx, hy = grid.h
    psi = rng.standard_normal(grid.cells)
    ux = (np.roll(psi, -1, axis=1) - psi) / hy
    uy = -(np.roll(psi, -1, axis=0) - psi) / hx
    return VectorField(grid, [ux, uy])
