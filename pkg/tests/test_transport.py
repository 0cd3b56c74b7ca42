import math

import numpy as np
import pytest

from ksns.errors import CFLError, StateError
from ksns.grid import GridSpec, ScalarField, VectorField, integrate
from ksns.regularization import ModelParams
from ksns.state import SimState
from ksns.transport import (
    TransportConfig,
    advective_flux,
    chemotactic_flux,
    stable_dt,
    step_c,
    step_n,
)

from conftest import stream_function_velocity


def _state(grid, n, c, u=None):
    return SimState(
        n=n,
        c=c,
        u=u if u is not None else VectorField.zeros(grid),
        p=ScalarField.zeros(grid),
    )


def _ones_rho(grid):
    return ScalarField.full(grid, 1.0)


# ---------------------------------------------------------------- flux


def test_chemotactic_flux_zero_density():
    g = GridSpec(2, (8, 8), (1.0, 1.0))
    p = ModelParams(alpha=0.5)
    c = ScalarField.from_function(g, lambda x, y: x + y)
    flux = chemotactic_flux(ScalarField.zeros(g), c, p, _ones_rho(g))
    for comp in flux.components:
        assert np.all(comp == 0.0)


def test_chemotactic_flux_constant_signal():
    g = GridSpec(2, (8, 8), (1.0, 1.0))
    p = ModelParams(alpha=0.5)
    flux = chemotactic_flux(ScalarField.full(g, 2.0), ScalarField.full(g, 1.0), p, _ones_rho(g))
    for comp in flux.components:
        assert np.all(comp == 0.0)


def test_chemotactic_flux_two_cell_hand_value():
    # two cells along x, c = (0, h): interior face flux = 1*1*1*(h-0)/h = 1
    g = GridSpec(2, (2, 1), (1.0, 0.5))
    h = g.h[0]
    p = ModelParams(alpha=0.0, c_s=1.0, eps=0.0)
    n = ScalarField(g, np.ones((2, 1)))
    c = ScalarField(g, np.array([[0.0], [h]]))
    flux = chemotactic_flux(n, c, p, _ones_rho(g))
    assert flux.components[0][1, 0] == pytest.approx(1.0, abs=1e-14)
    assert flux.components[0][0, 0] == 0.0 and flux.components[0][2, 0] == 0.0


def test_chemotactic_flux_face_bound():
    g = GridSpec(2, (16, 16), (1.0, 1.0))
    rng = np.random.default_rng(4)
    p = ModelParams(alpha=0.5, c_s=1.7, eps=0.3)
    n = ScalarField(g, rng.uniform(0.0, 5.0, g.cells))
    c = ScalarField(g, rng.uniform(0.0, 2.0, g.cells))
    rho = _ones_rho(g)
    flux = chemotactic_flux(n, c, p, rho)
    from ksns.grid import gradient, upwind_to_faces

    gc = gradient(c)
    for d in range(2):
        n_up = upwind_to_faces(n, gc.components[d], d)
        cap = p.c_s * n_up * (1.0 + n_up) ** (-p.alpha) * np.abs(gc.components[d])
        assert np.all(np.abs(flux.components[d]) <= cap * (1 + 1e-12) + 1e-300)


def test_chemotactic_flux_rejects_negative_density():
    g = GridSpec(2, (4, 4), (1.0, 1.0))
    n = ScalarField(g, -np.ones(g.cells))
    with pytest.raises(StateError):
        chemotactic_flux(n, ScalarField.zeros(g), ModelParams(), _ones_rho(g))


# ---------------------------------------------------------------- step_n


def test_step_n_pure_diffusion_mass_and_max_principle():
    g = GridSpec(2, (32, 32), (1.0, 1.0))
    rng = np.random.default_rng(7)
    n = ScalarField(g, rng.uniform(0.1, 2.0, g.cells))
    st = _state(g, n, ScalarField.full(g, 1.0))
    cfg = TransportConfig(dt=1e-5, diffusion_mode="explicit")
    p = ModelParams(alpha=0.5)
    out = step_n(st, p, cfg)
    assert abs(integrate(out) - integrate(n)) <= 1e-13 * integrate(n)
    assert np.max(out.values) <= np.max(n.values) + 1e-13
    assert np.min(out.values) >= np.min(n.values) - 1e-13


def test_step_n_constant_density_transported_invariantly():
    g = GridSpec(2, (16, 16), (1.0, 1.0))
    u = stream_function_velocity(g)
    st = _state(g, ScalarField.full(g, 1.5), ScalarField.full(g, 2.0), u)
    cfg = TransportConfig(dt=1e-4, diffusion_mode="implicit")
    out = step_n(st, ModelParams(alpha=0.5), cfg)
    assert np.max(np.abs(out.values - 1.5)) <= 1e-12


def test_step_n_matches_dense_matrix_exponential_oracle():
    """Linearized drift-diffusion against an independently assembled dense
    operator integrated by the matrix exponential (32-cell quasi-1D grid)."""
    from scipy.linalg import expm

    cells = 32
    g = GridSpec(2, (cells, 1), (1.0, 1.0))
    h = g.h[0]
    p = ModelParams(alpha=0.0, c_s=1.0, eps=0.0)
    # c = x: interior face gradient exactly 1, boundary faces 0 (Neumann)
    c = ScalarField.from_function(g, lambda x, y: x)
    xs = g.cell_centers(0)
    n0 = np.exp(-((xs - 0.4) ** 2) / (2 * 0.08**2))

    # oracle: assemble d n/dt = A n from first principles (upwind drift with
    # velocity +1 through interior faces, centered diffusion, no-flux walls)
    A = np.zeros((cells, cells))
    for i in range(cells + 1):  # faces
        if i == 0 or i == cells:
            continue
        # diffusive flux -(n_i - n_{i-1})/h through face i
        A[i - 1, i - 1] -= 1.0 / h**2
        A[i - 1, i] += 1.0 / h**2
        A[i, i - 1] += 1.0 / h**2
        A[i, i] -= 1.0 / h**2
        # drift flux n_{i-1} (upwind, velocity +1) through face i
        A[i - 1, i - 1] -= 1.0 / h
        A[i, i - 1] += 1.0 / h
    T = 0.05
    oracle = expm(A * T) @ n0

    cfg = TransportConfig(dt=1e-6, diffusion_mode="explicit")
    st = _state(g, ScalarField(g, n0[:, None].copy()), c)
    steps = int(round(T / 2e-5))
    dt = T / steps
    for _ in range(steps):
        new_n = step_n(st, p, cfg, dt=dt)
        st = _state(g, new_n, c)
    err = np.max(np.abs(st.n.values[:, 0] - oracle)) / np.max(np.abs(oracle))
    assert err <= 1e-3


# ---------------------------------------------------------------- step_c


def test_step_c_exact_uniform_decay():
    g = GridSpec(2, (8, 8), (1.0, 1.0))
    st = _state(g, ScalarField.zeros(g), ScalarField.full(g, 3.0))
    cfg = TransportConfig(dt=0.01)
    out = step_c(st, ModelParams(alpha=0.5), cfg)
    assert np.max(np.abs(out.values - 3.0 * math.exp(-0.01))) <= 1e-14


def test_step_c_exact_uniform_production():
    g = GridSpec(2, (8, 8), (1.0, 1.0))
    st = _state(g, ScalarField.full(g, 2.0), ScalarField.zeros(g))
    cfg = TransportConfig(dt=0.01)
    out = step_c(st, ModelParams(alpha=0.5, eps=0.0), cfg)
    assert np.max(np.abs(out.values - 2.0 * (1.0 - math.exp(-0.01)))) <= 1e-14


def test_step_c_relaxes_to_homogeneous_equilibrium():
    g = GridSpec(2, (8, 8), (1.0, 1.0))
    n_bar = 1.7
    dt = 0.05
    st = _state(g, ScalarField.full(g, n_bar), ScalarField.full(g, 0.2))
    cfg = TransportConfig(dt=dt)
    p = ModelParams(alpha=0.5, eps=0.0)
    steps = int(round(10.0 / dt))
    for _ in range(steps):
        out = step_c(st, p, cfg)
        st = _state(g, st.n, out)
    assert np.max(np.abs(st.c.values - n_bar)) <= math.exp(-10.0) * abs(0.2 - n_bar) + 1e-12


def test_step_c_discrete_mass_balance_first_order():
    g = GridSpec(2, (16, 16), (1.0, 1.0))
    rng = np.random.default_rng(3)
    n = ScalarField(g, rng.uniform(0.0, 2.0, g.cells))
    c = ScalarField(g, rng.uniform(0.0, 1.0, g.cells))
    st = _state(g, n, c)
    p = ModelParams(alpha=0.5, eps=0.2)
    dt = 1e-3
    out = step_c(st, p, TransportConfig(dt=dt))
    from ksns.regularization import f_eps

    source = integrate(ScalarField(g, f_eps(p.eps, n.values)))
    predicted = integrate(c) + dt * (source - integrate(c))
    assert abs(integrate(out) - predicted) <= 5.0 * dt**2 * max(source, integrate(c))


# ---------------------------------------------------------------- stable_dt


def test_stable_dt_explicit_diffusion_bound():
    g = GridSpec(2, (64, 64), (1.0, 1.0))
    st = _state(g, ScalarField.full(g, 1.0), ScalarField.full(g, 1.0))
    cfg = TransportConfig(dt=1e-3, diffusion_mode="explicit", dt_max=10.0)
    # u = 0 and constant c: only the diffusive rate remains: h^2 / (2 dims)
    assert stable_dt(st, ModelParams(alpha=0.5), cfg) == pytest.approx(
        1.0 / (4.0 * 64**2), rel=1e-12
    )


def test_stable_dt_unconstrained_returns_dt_max():
    g = GridSpec(2, (16, 16), (1.0, 1.0))
    st = _state(g, ScalarField.zeros(g), ScalarField.zeros(g))
    cfg = TransportConfig(dt=1e-3, diffusion_mode="implicit", dt_max=0.25)
    assert stable_dt(st, ModelParams(alpha=0.5), cfg) == 0.25


def test_stable_dt_advective_bound():
    g = GridSpec(2, (32, 32), (1.0, 1.0))
    u = VectorField.zeros(g)
    u.components[0][1:-1, :] = 2.0
    st = _state(g, ScalarField.full(g, 1.0), ScalarField.full(g, 1.0), u)
    cfg = TransportConfig(dt=1e-3, diffusion_mode="implicit", dt_max=10.0)
    h = 1.0 / 32
    assert stable_dt(st, ModelParams(alpha=0.5), cfg) == pytest.approx(h / 2.0, rel=1e-12)


def test_cfl_violation_rejected_with_suggestion():
    g = GridSpec(2, (32, 32), (1.0, 1.0))
    st = _state(g, ScalarField.full(g, 1.0), ScalarField.full(g, 1.0))
    cfg = TransportConfig(dt=1.0, diffusion_mode="explicit")
    with pytest.raises(CFLError) as err:
        step_n(st, ModelParams(alpha=0.5), cfg)
    assert 0.0 < err.value.suggested_dt < 1.0


# ---------------------------------------------------------------- invariants


def _blob_state(grid, seed=0):
    rng = np.random.default_rng(seed)
    xs = grid.center_mesh()
    r2 = (xs[0] - 0.45) ** 2 + (xs[1] - 0.55) ** 2
    n = ScalarField(grid, 3.0 * np.exp(-r2 / 0.02) + 1e-6)
    c = ScalarField(grid, 0.5 + 0.4 * np.cos(np.pi * xs[0]) * np.cos(np.pi * xs[1]))
    return _state(grid, n, c)


@pytest.mark.parametrize("mode", ["explicit", "implicit"])
def test_mass_conservation_and_positivity_over_steps(mode):
    g = GridSpec(2, (32, 32), (1.0, 1.0))
    st = _blob_state(g)
    p = ModelParams(alpha=0.5, c_s=1.0, eps=0.0)
    cfg = TransportConfig(dt=1e-3, diffusion_mode=mode, dt_max=1.0)
    m0 = integrate(st.n)
    mass_c_cap = max(integrate(st.c), m0)
    for k in range(60):
        dt = 0.4 * stable_dt(st, p, cfg)
        c_new = step_c(st, p, cfg, dt=dt)
        n_new = step_n(_state(g, st.n, c_new), p, cfg, dt=dt)
        st = _state(g, n_new, c_new)
        assert np.min(st.n.values) >= 0.0
        assert np.min(st.c.values) >= 0.0
        assert abs(integrate(st.n) - m0) <= 1e-12 * m0 * (k + 1)
        assert integrate(st.c) <= mass_c_cap + 1e-9


def test_muscl_preserves_constants_and_mass():
    g = GridSpec(2, (32, 32), (1.0, 1.0), "periodic", "periodic")
    from conftest import random_periodic_divfree

    u = random_periodic_divfree(g, seed=2)
    st = _state(g, ScalarField.full(g, 2.0), ScalarField.full(g, 1.0), u)
    cfg = TransportConfig(dt=1e-4, advection_scheme="muscl", diffusion_mode="implicit")
    p = ModelParams(alpha=0.5)
    dt = 0.4 * stable_dt(st, p, cfg)
    out = step_n(st, p, cfg, dt=dt)
    assert np.max(np.abs(out.values - 2.0)) <= 1e-12
    xs = g.center_mesh()
    blob = ScalarField(g, 1.0 + np.sin(2 * np.pi * xs[0]) ** 2)
    st = _state(g, blob, ScalarField.full(g, 1.0), u)
    dt = 0.4 * stable_dt(st, p, cfg)
    out = step_n(st, p, cfg, dt=dt)
    assert abs(integrate(out) - integrate(blob)) <= 1e-12 * integrate(blob)
    assert np.min(out.values) >= 0.0


def test_advective_flux_upwind_direction():
    g = GridSpec(2, (4, 1), (1.0, 1.0))
    n = ScalarField(g, np.array([[1.0], [2.0], [3.0], [4.0]]))
    u = VectorField.zeros(g)
    u.components[0][1:-1, :] = 1.0  # rightward: upwind value is the left cell
    flux = advective_flux(n, u)
    assert flux.components[0][1, 0] == 1.0
    assert flux.components[0][2, 0] == 2.0
    u.components[0][1:-1, :] = -1.0
    flux = advective_flux(n, u)
    assert flux.components[0][1, 0] == -2.0


def test_tensor_rotational_flux_turns_the_drift():
    # quarter-turn sensitivity: an x-gradient of the signal drives a y-flux
    g = GridSpec(2, (16, 16), (1.0, 1.0))
    p_rot = ModelParams(
        alpha=0.0, c_s=1.0, eps=0.0,
        sensitivity_kind="tensor_rotational", rotation_angle=np.pi / 2,
    )
    n = ScalarField.full(g, 1.0)
    c = ScalarField.from_function(g, lambda x, y: x)
    rho = ScalarField.full(g, 1.0)
    flux = chemotactic_flux(n, c, p_rot, rho)
    # rotation by pi/2 maps (dc/dx, 0) to (0, dc/dx): x-flux vanishes, the
    # y-flux picks up the interpolated unit gradient in the interior
    assert np.max(np.abs(flux.components[0][1:-1, :])) <= 1e-12
    assert np.max(np.abs(flux.components[1][2:-2, 1:-1] - 1.0)) <= 1e-12


def test_tensor_rotational_step_keeps_mass_and_positivity():
    g = GridSpec(2, (24, 24), (1.0, 1.0))
    p_rot = ModelParams(
        alpha=0.5, c_s=1.0, eps=0.1,
        sensitivity_kind="tensor_rotational", rotation_angle=0.6,
        cutoff_width=0.1,
    )
    st = _blob_state(g)
    cfg = TransportConfig(dt=1e-3, diffusion_mode="implicit", dt_max=0.05)
    m0 = integrate(st.n)
    for _ in range(20):
        dt = 0.4 * stable_dt(st, p_rot, cfg)
        n_new = step_n(st, p_rot, cfg, dt=dt)
        st = _state(g, n_new, st.c)
        assert np.min(st.n.values) >= 0.0
    assert abs(integrate(st.n) - m0) <= 1e-12 * m0 * 20
