"""Run orchestration: configuration, initial data, the coupled time loop,
parameter sweeps, checkpointing, and run reports.

Per-step coupling follows a Gauss-Seidel sweep: velocity with the current
density, signal with the new velocity, then density with the new velocity
and signal, so the stiff chemotactic term always sees the freshest signal
gradient. The step size adapts to the positivity bound with a safety
factor; rejected steps halve the step until an underflow floor aborts the
run with partial outputs intact.
"""

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as kernels
from .diagnostics import blowup_indicator, compute_record, write_csv
from .errors import CFLError, ConfigError
from .fluid import FluidConfig, project, step_u
from .grid import GridSpec, ScalarField, VectorField
from .regularization import ModelParams, PotentialSpec, cutoff_rho
from .snapshot import read_snapshot, write_snapshot
from .state import SimState
from .transport import TransportConfig, stable_dt, step_c, step_n

WORKERS_ENV = "KSNS_WORKERS"


@dataclass(frozen=True)
class InitialData:
    kind: str  # uniform | gaussian | snapshot | manufactured
    n_bar: float = 1.0
    c_bar: float = 1.0
    center: tuple = ()
    width: float = 0.15
    amplitude: float = 1.0
    path: str = ""
    test_id: str = ""


@dataclass
class RunConfig:
    grid: GridSpec
    params: ModelParams
    transport: TransportConfig
    fluid: FluidConfig
    t_end: float = 1.0
    output_every: int = 0
    initial: InitialData = field(default_factory=lambda: InitialData("uniform"))
    seed: int = 0
    safety: float = 0.4
    sup_ceiling: float = 1e6
    max_steps: int = None
    dt_min_factor: float = 1e-10
    outdir: str = None
    applied_defaults: list = field(default_factory=list)

    def validate(self):
        violations = []
        if not (self.t_end > 0.0):
            violations.append(f"run.t_end must be positive, got {self.t_end}")
        if self.initial.kind == "uniform":
            if self.initial.n_bar < 0.0:
                violations.append(
                    "initial density must be nonnegative (n0 >= 0 hypothesis), "
                    f"got {self.initial.n_bar}"
                )
            if self.initial.c_bar < 0.0:
                violations.append(
                    "initial concentration must be nonnegative (c0 >= 0 hypothesis), "
                    f"got {self.initial.c_bar}"
                )
        if self.initial.kind == "gaussian" and self.initial.amplitude < 0.0:
            violations.append("gaussian amplitude must be nonnegative")
        if violations:
            raise ConfigError(violations)
        return self


@dataclass
class SweepConfig:
    alpha_values: list
    eps_values: list
    base: RunConfig

    def validate(self):
        violations = []
        if not self.alpha_values:
            violations.append("sweep.alpha must be a nonempty list")
        if not self.eps_values:
            violations.append("sweep.eps must be a nonempty list")
        if any(a < 0 for a in self.alpha_values):
            violations.append("sweep alpha values must be >= 0")
        if any(e < 0 for e in self.eps_values):
            violations.append("sweep eps values must be >= 0")
        if violations:
            raise ConfigError(violations)
        return self


@dataclass
class RunReport:
    halt_reason: str
    steps: int
    t_final: float
    wall_time: float
    backend: str
    min_n: float
    min_c: float
    ranges: dict
    blowup_rate: float
    csv_path: str = None
    report_path: str = None
    records: list = None
    final_state: object = None

    @property
    def exit_code(self):
        if self.halt_reason == "completed":
            return 0
        if self.halt_reason == "blow_up_ceiling":
            return 2
        return 1


# ---------------------------------------------------------------------------
# manufactured solutions (forced exact fields for convergence measurement)


class _ManufacturedDiffusionReaction:
    """Signal equation with a forced exact solution on a Neumann box:
    c(x, t) = 1.5 + exp(-t) cos(pi x) cos(pi y); density and velocity zero."""

    test_id = "c_diffusion_reaction"

    def _cc(self, grid):
        xs, ys = grid.center_mesh()[:2]
        lx, ly = grid.box[0], grid.box[1]
        return np.cos(np.pi * xs / lx) * np.cos(np.pi * ys / ly)

    def exact_c(self, grid, t):
        return 1.5 + math.exp(-t) * self._cc(grid)

    def initial(self, grid):
        n0 = ScalarField.zeros(grid)
        c0 = ScalarField(grid, self.exact_c(grid, 0.0))
        return n0, c0, VectorField.zeros(grid)

    def forcing_c(self, grid, t):
        lx = grid.box[0]
        k2 = 2.0 * (np.pi / lx) ** 2
        return k2 * math.exp(-t) * self._cc(grid) + 1.5

    def forcing_n(self, grid, t):
        return None

    def validate(self, grid, params):
        if grid.periodic or grid.dims != 2:
            raise ConfigError("c_diffusion_reaction requires a 2D Neumann grid")
        if abs(grid.box[0] - grid.box[1]) > 1e-12:
            raise ConfigError("c_diffusion_reaction requires a square box")


class _ManufacturedAdvection:
    """Density advected by a constant velocity on a periodic box, diffusion
    cancelled by forcing: n(x, t) = 1.5 + sin(2 pi (x - t)) sin(2 pi (y - t/2)).
    The signal is pinned at one by a compensating source, keeping the
    chemotactic drift inactive up to discretization error."""

    test_id = "n_advection"
    velocity = (1.0, 0.5)

    def exact_n(self, grid, t):
        xs, ys = grid.center_mesh()[:2]
        return 1.5 + np.sin(2.0 * np.pi * (xs - t)) * np.sin(
            2.0 * np.pi * (ys - 0.5 * t)
        )

    def initial(self, grid):
        n0 = ScalarField(grid, self.exact_n(grid, 0.0))
        c0 = ScalarField.full(grid, 1.0)
        comps = [
            np.full(grid.face_shape(d), self.velocity[d]) for d in range(grid.dims)
        ]
        return n0, c0, VectorField(grid, comps)

    def forcing_n(self, grid, t):
        return 8.0 * np.pi**2 * (self.exact_n(grid, t) - 1.5)

    def forcing_c(self, grid, t):
        return 1.0 - self.exact_n(grid, t)

    def validate(self, grid, params):
        if not grid.periodic or grid.dims != 2:
            raise ConfigError("n_advection requires a 2D periodic grid")
        if params.eps != 0.0:
            raise ConfigError("n_advection requires eps = 0")


MANUFACTURED = {
    m.test_id: m for m in (_ManufacturedDiffusionReaction(), _ManufacturedAdvection())
}


# ---------------------------------------------------------------------------
# initial data


def _gaussian_field(grid, center, width, amplitude):
    mesh = grid.center_mesh()
    r2 = np.zeros(grid.cells)
    for d in range(grid.dims):
        r2 += (mesh[d] - center[d]) ** 2
    vals = np.exp(-r2 / (2.0 * width * width))
    peak = float(np.max(vals))
    if peak > 0.0 and amplitude > 0.0:
        vals *= amplitude / peak
    else:
        vals *= 0.0
    return ScalarField(grid, vals)


def build_initial_state(config):
    grid = config.grid
    init = config.initial
    if init.kind == "uniform":
        n0 = ScalarField.full(grid, init.n_bar)
        c0 = ScalarField.full(grid, init.c_bar)
        u0 = VectorField.zeros(grid)
    elif init.kind == "gaussian":
        center = init.center or tuple(0.5 * b for b in grid.box)
        n0 = _gaussian_field(grid, center, init.width, init.amplitude)
        c0 = ScalarField(grid, 0.5 * n0.values)
        u0 = VectorField.zeros(grid)
    elif init.kind == "snapshot":
        state = read_snapshot(init.path)
        if state.n.grid != grid:
            raise ConfigError(
                ["snapshot grid does not match the configured grid"]
            )
        return state
    elif init.kind == "manufactured":
        if init.test_id not in MANUFACTURED:
            raise ConfigError([f"unknown manufactured test id {init.test_id!r}"])
        mf = MANUFACTURED[init.test_id]
        mf.validate(grid, config.params)
        n0, c0, u0 = mf.initial(grid)
    else:
        raise ConfigError([f"unknown initial data kind {init.kind!r}"])
    if np.min(n0.values) < 0.0:
        raise ConfigError(["initial density must be nonnegative (n0 >= 0 hypothesis)"])
    if np.min(c0.values) < 0.0:
        raise ConfigError(
            ["initial concentration must be nonnegative (c0 >= 0 hypothesis)"]
        )
    return SimState(n=n0, c=c0, u=u0, p=ScalarField.zeros(grid), t=0.0, step=0)


# ---------------------------------------------------------------------------
# the time loop


def _fluid_cfl_bound(state, params):
    if params.kappa == 0.0:
        return math.inf
    grid = state.u.grid
    rate = 0.0
    for d in range(grid.dims):
        rate += float(np.max(np.abs(state.u.components[d]))) / grid.h[d]
    return math.inf if rate <= 0.0 else 1.0 / rate


def _range_tracker(records):
    keys = (
        "mass_n",
        "mass_c",
        "l2_c",
        "l2_u",
        "dissipation_n",
        "dissipation_c",
        "dissipation_u",
        "entropy_n",
        "sup_n",
        "grad_c_sup",
        "grad_u_sup",
        "div_residual",
        "energy_E",
    )
    out = {}
    for key in keys:
        vals = [getattr(r, key) for r in records]
        out[key] = (min(vals), max(vals))
    for p in records[0].lp_n:
        vals = [r.lp_n[p] for r in records]
        out[f"lp_n_{p:.17g}"] = (min(vals), max(vals))
    return out


def run(config):
    """Advance the coupled system to t_end (or a halt) and report.

    Writes ``diagnostics.csv``, periodic ``snapshots/step_<k>.bin`` and
    ``report.json`` when an output directory is configured; diagnostics are
    flushed even when the run halts early.
    """
    config.validate()
    t_start = time.perf_counter()
    grid = config.grid
    params = config.params
    tcfg = config.transport
    fcfg = config.fluid
    mf = MANUFACTURED.get(config.initial.test_id) if config.initial.kind == "manufactured" else None

    state = build_initial_state(config)
    u_proj, _, _ = project(state.u, fcfg.pressure_tol)
    state = SimState(state.n, state.c, u_proj, state.p, state.t, state.step)
    rho = cutoff_rho(grid, params.cutoff_spec(grid))

    outdir = config.outdir
    snap_dir = None
    if outdir:
        os.makedirs(outdir, exist_ok=True)
        snap_dir = os.path.join(outdir, "snapshots")
        os.makedirs(snap_dir, exist_ok=True)

    records = [compute_record(state, params)]
    min_n = float(np.min(state.n.values))
    min_c = float(np.min(state.c.values))
    halt_reason = "completed"
    dt_floor = config.dt_min_factor * config.t_end

    try:
        while state.t < config.t_end * (1.0 - 1e-14):
            if config.max_steps is not None and state.step >= config.max_steps:
                break
            bound = min(stable_dt(state, params, tcfg), _fluid_cfl_bound(state, params))
            dt = min(config.safety * bound, tcfg.dt_max, config.t_end - state.t)
            advanced = None
            while advanced is None:
                if dt < dt_floor:
                    halt_reason = "dt_underflow"
                    break
                try:
                    u_new, p_new, _stats = step_u(state, params, fcfg, dt=dt)
                    mid = SimState(state.n, state.c, u_new, p_new, state.t, state.step)
                    forcing_c = mf.forcing_c(grid, state.t) if mf else None
                    c_new = step_c(mid, params, tcfg, rho=rho, forcing=forcing_c, dt=dt)
                    mid = SimState(state.n, c_new, u_new, p_new, state.t, state.step)
                    forcing_n = mf.forcing_n(grid, state.t) if mf else None
                    n_new = step_n(mid, params, tcfg, rho=rho, forcing=forcing_n, dt=dt)
                    advanced = SimState(
                        n_new, c_new, u_new, p_new, state.t + dt, state.step + 1
                    )
                except CFLError:
                    dt *= 0.5
            if advanced is None:
                break
            state = advanced
            rec = compute_record(state, params)
            records.append(rec)
            min_n = min(min_n, float(np.min(state.n.values)))
            min_c = min(min_c, float(np.min(state.c.values)))
            if snap_dir and config.output_every and state.step % config.output_every == 0:
                write_snapshot(state, os.path.join(snap_dir, f"step_{state.step}.bin"))
            if rec.sup_n > config.sup_ceiling:
                halt_reason = "blow_up_ceiling"
                break
    finally:
        csv_path = None
        if outdir:
            csv_path = os.path.join(outdir, "diagnostics.csv")
            write_csv(records, params, csv_path)

    if snap_dir:
        write_snapshot(state, os.path.join(snap_dir, f"step_{state.step}.bin"))

    window = min(20, len(records))
    rate = blowup_indicator(records, window) if window >= 2 else 0.0
    report = RunReport(
        halt_reason=halt_reason,
        steps=state.step,
        t_final=state.t,
        wall_time=time.perf_counter() - t_start,
        backend=kernels.backend_name,
        min_n=min_n,
        min_c=min_c,
        ranges=_range_tracker(records),
        blowup_rate=rate,
        csv_path=csv_path,
        records=records,
        final_state=state,
    )
    if outdir:
        report.report_path = os.path.join(outdir, "report.json")
        payload = {
            "halt_reason": report.halt_reason,
            "steps": report.steps,
            "t_final": report.t_final,
            "wall_time": report.wall_time,
            "backend": report.backend,
            "min_n": report.min_n,
            "min_c": report.min_c,
            "blowup_rate": report.blowup_rate,
            "ranges": {k: list(v) for k, v in report.ranges.items()},
            "alpha": params.alpha,
            "eps": params.eps,
            "kappa": params.kappa,
            "seed": config.seed,
        }
        with open(report.report_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
    return report


# ---------------------------------------------------------------------------
# sweeps


def _sweep_cell(args):
    alpha, eps, base, outdir = args
    from dataclasses import replace

    params = replace(base.params, alpha=alpha, eps=eps)
    cfg = RunConfig(
        grid=base.grid,
        params=params,
        transport=base.transport,
        fluid=base.fluid,
        t_end=base.t_end,
        output_every=base.output_every,
        initial=base.initial,
        seed=base.seed,
        safety=base.safety,
        sup_ceiling=base.sup_ceiling,
        max_steps=base.max_steps,
        dt_min_factor=base.dt_min_factor,
        outdir=outdir,
    )
    try:
        report = run(cfg)
        return {
            "alpha": alpha,
            "eps": eps,
            "halt_reason": report.halt_reason,
            "steps": report.steps,
            "sup_n_max": report.ranges["sup_n"][1],
            "blowup_rate": report.blowup_rate,
            "bounded": report.halt_reason == "completed",
            "outdir": outdir,
            "error": None,
        }
    except Exception as exc:  # individual failures recorded, sweep continues
        return {
            "alpha": alpha,
            "eps": eps,
            "halt_reason": "error",
            "steps": 0,
            "sup_n_max": float("nan"),
            "blowup_rate": float("nan"),
            "bounded": False,
            "outdir": outdir,
            "error": f"{type(exc).__name__}: {exc}",
        }


def worker_count():
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def sweep(config):
    """One run per (alpha, eps) pair with shared initial data; pairs are
    ordered deterministically and may execute on a worker pool."""
    config.validate()
    base = config.base
    tasks = []
    for i, alpha in enumerate(config.alpha_values):
        for j, eps in enumerate(config.eps_values):
            outdir = None
            if base.outdir:
                outdir = os.path.join(base.outdir, f"alpha_{i}_eps_{j}")
            tasks.append((float(alpha), float(eps), base, outdir))
    workers = worker_count()
    if workers == 1:
        results = [_sweep_cell(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_cell, tasks))
    report = {
        "alpha_values": [float(a) for a in config.alpha_values],
        "eps_values": [float(e) for e in config.eps_values],
        "cells": results,
        "workers": workers,
    }
    if base.outdir:
        os.makedirs(base.outdir, exist_ok=True)
        path = os.path.join(base.outdir, "sweep_report.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
        report["report_path"] = path
    return report


# ---------------------------------------------------------------------------
# configuration text format


_GRID_KEYS = {"grid.dims", "grid.cells", "grid.box", "grid.bc_scalar", "grid.bc_velocity"}
_PARAM_KEYS = {
    "params.alpha",
    "params.c_s",
    "params.kappa",
    "params.eps",
    "params.phi",
    "params.sensitivity",
    "params.cutoff_width",
}
_TRANSPORT_KEYS = {
    "transport.diffusion_mode",
    "transport.advection_scheme",
    "transport.chemotaxis_limiter",
    "transport.dt_max",
    "transport.implicit_rtol",
}
_FLUID_KEYS = {"fluid.pressure_tol", "fluid.viscous_mode"}
_RUN_KEYS = {
    "run.t_end",
    "run.output_every",
    "run.initial",
    "run.seed",
    "run.safety",
    "run.sup_ceiling",
    "run.max_steps",
    "run.outdir",
    "run.dt_min_factor",
}
_SWEEP_KEYS = {"sweep.alpha", "sweep.eps"}
KNOWN_KEYS = _GRID_KEYS | _PARAM_KEYS | _TRANSPORT_KEYS | _FLUID_KEYS | _RUN_KEYS | _SWEEP_KEYS

_DEFAULTS = {
    "grid.dims": "2",
    "grid.cells": "64 64",
    "grid.box": "1 1",
    "grid.bc_scalar": "neumann",
    "grid.bc_velocity": "no_slip",
    "params.alpha": "0.5",
    "params.c_s": "1.0",
    "params.kappa": "0.0",
    "params.eps": "0.0",
    "params.phi": "gravity 0 -1",
    "params.sensitivity": "scalar",
    "transport.diffusion_mode": "implicit",
    "transport.advection_scheme": "upwind1",
    "transport.chemotaxis_limiter": "on",
    "transport.dt_max": "0.05",
    "transport.implicit_rtol": "1e-10",
    "fluid.pressure_tol": "1e-8",
    "fluid.viscous_mode": "implicit",
    "run.t_end": "1.0",
    "run.output_every": "0",
    "run.initial": "uniform 1.0 1.0",
    "run.seed": "0",
    "run.safety": "0.4",
    "run.sup_ceiling": "1e6",
    "run.dt_min_factor": "1e-10",
}


def _parse_lines(text, violations):
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            violations.append(f"line {lineno}: expected 'key = value', got {raw!r}")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            violations.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in seen:
            violations.append(f"line {lineno}: duplicate key {key!r}")
            continue
        seen[key] = value
    return seen


def _get_float(kv, key, violations, positive=False, nonnegative=False):
    raw = kv[key]
    try:
        val = float(raw)
    except ValueError:
        violations.append(f"{key}: not a number: {raw!r}")
        return None
    if positive and not (val > 0.0):
        violations.append(f"{key} must be positive, got {val}")
        return None
    if nonnegative and val < 0.0:
        if key == "params.alpha":
            violations.append(f"{key} must satisfy alpha >= 0, got {val}")
        elif key == "params.eps":
            violations.append(f"{key} must satisfy eps >= 0, got {val}")
        else:
            violations.append(f"{key} must be nonnegative, got {val}")
        return None
    return val


def _parse_initial(raw, dims, violations):
    parts = raw.split()
    if not parts:
        violations.append("run.initial: empty specification")
        return None
    kind = parts[0]
    try:
        if kind == "uniform":
            n_bar, c_bar = float(parts[1]), float(parts[2])
            if n_bar < 0.0:
                violations.append(
                    "run.initial: initial density must be nonnegative (n0 >= 0 hypothesis)"
                )
                return None
            if c_bar < 0.0:
                violations.append(
                    "run.initial: initial concentration must be nonnegative (c0 >= 0 hypothesis)"
                )
                return None
            return InitialData("uniform", n_bar=n_bar, c_bar=c_bar)
        if kind == "gaussian":
            vals = [float(p) for p in parts[1:]]
            if len(vals) != dims + 2:
                violations.append(
                    f"run.initial: gaussian needs {dims} center coords, width, amplitude"
                )
                return None
            center = tuple(vals[:dims])
            width, amplitude = vals[dims], vals[dims + 1]
            if width <= 0.0:
                violations.append("run.initial: gaussian width must be positive")
                return None
            if amplitude < 0.0:
                violations.append("run.initial: gaussian amplitude must be nonnegative")
                return None
            return InitialData("gaussian", center=center, width=width, amplitude=amplitude)
        if kind == "snapshot":
            return InitialData("snapshot", path=parts[1])
        if kind == "manufactured":
            if parts[1] not in MANUFACTURED:
                violations.append(
                    f"run.initial: unknown manufactured test id {parts[1]!r}; "
                    f"known: {sorted(MANUFACTURED)}"
                )
                return None
            return InitialData("manufactured", test_id=parts[1])
    except (IndexError, ValueError):
        violations.append(f"run.initial: malformed specification {raw!r}")
        return None
    violations.append(f"run.initial: unknown kind {kind!r}")
    return None


def _parse_phi(raw, dims, violations):
    parts = raw.split()
    if parts and parts[0] == "gravity":
        try:
            vec = tuple(float(p) for p in parts[1:])
        except ValueError:
            violations.append(f"params.phi: malformed gravity vector {raw!r}")
            return None
        if len(vec) != dims:
            violations.append(f"params.phi: gravity vector needs {dims} components")
            return None
        return PotentialSpec("gravity", vector=vec)
    violations.append(f"params.phi: unknown potential {raw!r} (expected 'gravity ...')")
    return None


def parse_config(text):
    """Parse the flat key-value configuration format.

    Unknown keys are errors; every violation is collected and reported
    together. Applied defaults are recorded on the returned config.
    """
    violations = []
    kv = _parse_lines(text, violations)
    sweep_alpha = kv.pop("sweep.alpha", None)
    sweep_eps = kv.pop("sweep.eps", None)
    applied = []
    for key, default in _DEFAULTS.items():
        if key not in kv:
            kv[key] = default
            applied.append(f"{key} = {default}")

    dims_val = _get_float(kv, "grid.dims", violations)
    dims = int(dims_val) if dims_val is not None else 2

    def _tuple_of(key, count, caster):
        raw = kv.get(key)
        if raw is None:
            return None
        try:
            vals = tuple(caster(p) for p in raw.split())
        except ValueError:
            violations.append(f"{key}: malformed value {raw!r}")
            return None
        if len(vals) != count:
            violations.append(f"{key}: expected {count} entries, got {len(vals)}")
            return None
        return vals

    cells = _tuple_of("grid.cells", dims, int)
    box = _tuple_of("grid.box", dims, float)

    grid = None
    if cells and box:
        try:
            grid = GridSpec(dims, cells, box, kv["grid.bc_scalar"], kv["grid.bc_velocity"])
        except ConfigError as exc:
            violations.extend(exc.violations)

    alpha = _get_float(kv, "params.alpha", violations, nonnegative=True)
    c_s = _get_float(kv, "params.c_s", violations, positive=True)
    kappa = _get_float(kv, "params.kappa", violations)
    eps = _get_float(kv, "params.eps", violations, nonnegative=True)
    cutoff_width = None
    if "params.cutoff_width" in kv:
        cutoff_width = _get_float(kv, "params.cutoff_width", violations, positive=True)

    phi = _parse_phi(kv["params.phi"], dims, violations)

    sens_raw = kv["params.sensitivity"].split()
    sens_kind = "scalar_saturated"
    angle = 0.0
    if sens_raw and sens_raw[0] == "scalar":
        pass
    elif sens_raw and sens_raw[0] == "rotational":
        sens_kind = "tensor_rotational"
        try:
            angle = float(sens_raw[1]) if len(sens_raw) > 1 else 0.0
        except ValueError:
            violations.append(f"params.sensitivity: malformed angle in {kv['params.sensitivity']!r}")
    else:
        violations.append(
            f"params.sensitivity: expected 'scalar' or 'rotational <angle>', got {kv['params.sensitivity']!r}"
        )

    params = None
    if None not in (alpha, c_s, kappa, eps) and phi is not None:
        try:
            params = ModelParams(
                alpha=alpha,
                c_s=c_s,
                kappa=kappa,
                eps=eps,
                phi=phi,
                sensitivity_kind=sens_kind,
                rotation_angle=angle,
                cutoff_width=cutoff_width,
            )
        except ConfigError as exc:
            violations.extend(exc.violations)

    dt_max = _get_float(kv, "transport.dt_max", violations, positive=True)
    implicit_rtol = _get_float(kv, "transport.implicit_rtol", violations, positive=True)
    transport = None
    if dt_max is not None and implicit_rtol is not None:
        try:
            transport = TransportConfig(
                dt=min(dt_max, 1e-3),
                diffusion_mode=kv["transport.diffusion_mode"],
                advection_scheme=kv["transport.advection_scheme"],
                chemotaxis_limiter=kv["transport.chemotaxis_limiter"],
                dt_max=dt_max,
                implicit_rtol=implicit_rtol,
            )
        except ConfigError as exc:
            violations.extend(exc.violations)

    pressure_tol = _get_float(kv, "fluid.pressure_tol", violations, positive=True)
    fluid = None
    if pressure_tol is not None:
        try:
            fluid = FluidConfig(
                dt=1e-3, pressure_tol=pressure_tol, viscous_mode=kv["fluid.viscous_mode"]
            )
        except ConfigError as exc:
            violations.extend(exc.violations)

    t_end = _get_float(kv, "run.t_end", violations, positive=True)
    output_every_f = _get_float(kv, "run.output_every", violations, nonnegative=True)
    seed_f = _get_float(kv, "run.seed", violations)
    safety = _get_float(kv, "run.safety", violations, positive=True)
    sup_ceiling = _get_float(kv, "run.sup_ceiling", violations, positive=True)
    dt_min_factor = _get_float(kv, "run.dt_min_factor", violations, positive=True)
    max_steps = None
    if "run.max_steps" in kv:
        ms = _get_float(kv, "run.max_steps", violations, positive=True)
        max_steps = int(ms) if ms is not None else None
    initial = _parse_initial(kv["run.initial"], dims, violations)

    sweep_cfg = None
    if sweep_alpha is not None or sweep_eps is not None:
        try:
            alphas = [float(p) for p in (sweep_alpha or "").split()]
            epses = [float(p) for p in (sweep_eps or "").split()]
        except ValueError:
            violations.append("sweep.alpha/sweep.eps: malformed number lists")
            alphas, epses = [], []
        sweep_cfg = (alphas, epses)

    if violations:
        raise ConfigError(violations)

    config = RunConfig(
        grid=grid,
        params=params,
        transport=transport,
        fluid=fluid,
        t_end=t_end,
        output_every=int(output_every_f),
        initial=initial,
        seed=int(seed_f),
        safety=safety,
        sup_ceiling=sup_ceiling,
        max_steps=max_steps,
        dt_min_factor=dt_min_factor,
        outdir=kv.get("run.outdir"),
        applied_defaults=applied,
    ).validate()
    if sweep_cfg is not None:
        return SweepConfig(sweep_cfg[0], sweep_cfg[1], config).validate()
    return config
