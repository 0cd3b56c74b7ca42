import math

import numpy as np
import pytest

from ksns.fluid import (
    FluidConfig,
    body_force,
    convection,
    forcing_power,
    kinetic_energy,
    project,
    step_u,
    viscous_dissipation,
)
from ksns.grid import (
    GridSpec,
    ScalarField,
    VectorField,
    divergence,
    gradient,
    laplacian_velocity,
    scalar_l2,
    vector_inner,
    vector_l2,
)
from ksns.regularization import ModelParams, PotentialSpec
from ksns.state import SimState

from conftest import random_periodic_divfree, stream_function_velocity


# ---------------------------------------------------------------- project


def test_project_leaves_divfree_untouched():
    g = GridSpec(2, (16, 16), (1.0, 1.0))
    v = stream_function_velocity(g)
    w, q, stats = project(v, 1e-10)
    diff = VectorField(g, [a - b for a, b in zip(w.components, v.components)])
    assert vector_l2(diff) <= 1e-9
    assert np.max(np.abs(q.values)) <= 1e-9
    assert stats.final_residual <= 1e-10


def test_project_annihilates_gradients():
    g = GridSpec(2, (32, 32), (1.0, 1.0))
    f = ScalarField.from_function(g, lambda x, y: np.sin(2 * np.pi * x) * np.cos(np.pi * y))
    w, q, _ = project(gradient(f), 1e-10)
    assert vector_l2(w) <= 1e-8


def test_project_divergence_and_orthogonality():
    g = GridSpec(2, (32, 32), (1.0, 1.0))
    rng = np.random.default_rng(8)
    v = VectorField(g, [rng.standard_normal(g.face_shape(d)) for d in range(2)])
    tol = 1e-9
    w, q, stats = project(v, tol)
    assert scalar_l2(divergence(w)) <= tol
    r = ScalarField(g, rng.standard_normal(g.cells))
    ip = vector_inner(w, gradient(r))
    assert abs(ip) <= 10 * tol * (scalar_l2(r) + 1.0)
    # normal components vanish at walls
    assert np.all(w.components[0][0, :] == 0.0)
    assert np.all(w.components[1][:, -1] == 0.0)


def test_project_idempotent():
    g = GridSpec(2, (24, 24), (1.0, 1.0))
    rng = np.random.default_rng(1)
    v = VectorField(g, [rng.standard_normal(g.face_shape(d)) for d in range(2)])
    w1, _, _ = project(v, 1e-10)
    w2, _, _ = project(w1, 1e-10)
    diff = VectorField(g, [a - b for a, b in zip(w1.components, w2.components)])
    assert vector_l2(diff) <= 1e-9


# ---------------------------------------------------------------- step_u


def _rest_state(grid, n_value=0.0):
    return SimState(
        n=ScalarField.full(grid, n_value),
        c=ScalarField.zeros(grid),
        u=VectorField.zeros(grid),
        p=ScalarField.zeros(grid),
    )


def test_step_u_rest_state_stays_at_rest():
    g = GridSpec(2, (16, 16), (1.0, 1.0))
    p = ModelParams(alpha=0.5, phi=PotentialSpec("gravity", (0.0, -1.0)))
    cfg = FluidConfig(dt=1e-4, viscous_mode="explicit")
    u, pressure, _ = step_u(_rest_state(g), p, cfg)
    assert vector_l2(u) == 0.0
    assert np.max(np.abs(pressure.values)) == 0.0


def test_step_u_constant_forcing_absorbed_into_pressure():
    g = GridSpec(2, (16, 16), (1.0, 1.0))
    p = ModelParams(alpha=0.5, phi=PotentialSpec("gravity", (0.0, -1.0)))
    cfg = FluidConfig(dt=1e-4, viscous_mode="explicit", pressure_tol=1e-10)
    u, pressure, _ = step_u(_rest_state(g, n_value=2.0), p, cfg)
    assert vector_l2(u) <= 1e-6
    assert np.max(np.abs(pressure.values)) > 0.0  # gradient went into the pressure


def _taylor_green(grid):
    xs0 = grid.face_positions(0)
    yc0 = grid.cell_centers(1)
    x0, y0 = np.meshgrid(xs0, yc0, indexing="ij")
    ux = np.sin(x0) * np.cos(y0)
    xc1 = grid.cell_centers(0)
    yf1 = grid.face_positions(1)
    x1, y1 = np.meshgrid(xc1, yf1, indexing="ij")
    uy = -np.cos(x1) * np.sin(y1)
    return VectorField(grid, [ux, uy])


def test_step_u_taylor_green_decay():
    """Decaying vortex: kinetic energy falls at the viscous rate 2 nu k^2
    (per velocity power: exp(-4 t) for nu = k = 1); 2% over the run."""
    g = GridSpec(2, (128, 128), (2 * np.pi, 2 * np.pi), "periodic", "periodic")
    params = ModelParams(alpha=0.5, kappa=1.0, eps=0.0, phi=PotentialSpec("gravity", (0.0, 0.0)))
    cfg = FluidConfig(dt=2e-3, viscous_mode="implicit", pressure_tol=1e-9)
    st = SimState(ScalarField.zeros(g), ScalarField.zeros(g), _taylor_green(g), ScalarField.zeros(g))
    e0 = kinetic_energy(st.u)
    T = 0.2
    steps = 100
    dt = T / steps
    for _ in range(steps):
        u, p, _ = step_u(st, params, cfg, dt=dt)
        st = SimState(st.n, st.c, u, p, st.t + dt, st.step + 1)
    e_exact = e0 * math.exp(-4.0 * T)
    assert abs(kinetic_energy(st.u) - e_exact) / e_exact <= 0.02


# ---------------------------------------------------------------- energy


def test_kinetic_energy_values():
    g = GridSpec(2, (16, 16), (1.0, 1.0), "periodic", "periodic")
    assert kinetic_energy(VectorField.zeros(g)) == 0.0
    u = VectorField(g, [np.ones(g.face_shape(0)), np.zeros(g.face_shape(1))])
    assert kinetic_energy(u) == pytest.approx(0.5, abs=1e-14)


def test_kinetic_energy_matches_l2_norm():
    g = GridSpec(2, (16, 16), (1.0, 1.0))
    u = stream_function_velocity(g)
    ke = kinetic_energy(u)
    assert ke == pytest.approx(0.5 * vector_l2(u) ** 2, rel=1e-14)


def test_unforced_energy_dissipates():
    g = GridSpec(2, (24, 24), (1.0, 1.0))
    params = ModelParams(alpha=0.5, kappa=0.0, phi=PotentialSpec("gravity", (0.0, 0.0)))
    cfg = FluidConfig(viscous_mode="explicit", pressure_tol=1e-10)
    st = SimState(ScalarField.zeros(g), ScalarField.zeros(g),
                  stream_function_velocity(g), ScalarField.zeros(g))
    dt = 0.2 * g.h[0] ** 2 / 4.0
    for _ in range(40):
        e0 = kinetic_energy(st.u)
        d0 = viscous_dissipation(st.u)
        lap = laplacian_velocity(st.u)
        g2 = vector_inner(lap, lap)
        u, p, _ = step_u(st, params, cfg, dt=dt)
        e1 = kinetic_energy(u)
        assert e1 - e0 <= -dt * d0 + dt**2 * g2 + 1e-14
        assert e1 <= e0
        st = SimState(st.n, st.c, u, p, st.t + dt, st.step + 1)


def test_forced_energy_identity_residual():
    g = GridSpec(2, (32, 32), (1.0, 1.0))
    params = ModelParams(alpha=0.5, phi=PotentialSpec("gravity", (0.3, -1.0)))
    cfg = FluidConfig(viscous_mode="explicit", pressure_tol=1e-10)
    xs = g.center_mesh()
    n = ScalarField(g, 1.0 + 0.8 * np.exp(-((xs[0] - 0.4) ** 2 + (xs[1] - 0.6) ** 2) / 0.05))
    st = SimState(n, ScalarField.zeros(g), VectorField.zeros(g), ScalarField.zeros(g))
    dt = 0.4 * g.h[0] ** 2 / 4.0
    for _ in range(50):
        e0 = kinetic_energy(st.u)
        d0 = viscous_dissipation(st.u)
        f = body_force(st.n, params)
        w0 = forcing_power(st.u, f)
        lap = laplacian_velocity(st.u)
        gsum = VectorField(g, [a + b for a, b in zip(lap.components, f.components)])
        scale = 0.5 * vector_inner(gsum, gsum)
        u, p, _ = step_u(st, params, cfg, dt=dt)
        res = (kinetic_energy(u) - e0) / dt + d0 - w0
        assert abs(res) <= 5.0 * dt * scale + 1e-12
        st = SimState(st.n, st.c, u, p, st.t + dt, st.step + 1)


# ---------------------------------------------------------------- convection


def test_skew_convection_produces_no_energy():
    g = GridSpec(2, (32, 32), (1.0, 1.0), "periodic", "periodic")
    v = random_periodic_divfree(g, seed=5)
    conv = convection(v, v)
    ip = vector_inner(conv, v)
    assert abs(ip) <= 1e-12 * (vector_l2(conv) * vector_l2(v) + 1.0)


def test_skew_convection_3d():
    g = GridSpec(3, (8, 8, 8), (1.0, 1.0, 1.0), "periodic", "periodic")
    rng = np.random.default_rng(6)
    v = VectorField(g, [rng.standard_normal(g.face_shape(d)) for d in range(3)])
    conv = convection(v, v)
    ip = vector_inner(conv, v)
    assert abs(ip) <= 1e-12 * (vector_l2(conv) * vector_l2(v) + 1.0)


def test_upwind_convection_no_slip_sane():
    g = GridSpec(2, (16, 16), (1.0, 1.0))
    u = stream_function_velocity(g)
    conv = convection(u, u)
    for d in range(2):
        comp = conv.components[d]
        assert np.isfinite(comp).all()
        sl = [slice(None)] * 2
        sl[d] = 0
        assert np.all(comp[tuple(sl)] == 0.0)
    assert vector_l2(convection(VectorField.zeros(g), VectorField.zeros(g))) == 0.0
