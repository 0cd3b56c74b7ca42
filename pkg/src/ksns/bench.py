"""Benchmark the compiled kernel core against the NumPy fallback."""

import time

import numpy as np

from ._kernels import cython_backend, numpy_backend


def _bench_solver(backend, op, size, dims, alpha, repeats=3):
    shape = (size,) * dims
    h = tuple(1.0 / size for _ in range(dims))
    rng = np.random.default_rng(7)
    b = rng.standard_normal(shape)
    b -= b.mean()
    x0 = np.zeros(shape)
    best = float("inf")
    iters = 0
    for _ in range(repeats):
        t0 = time.perf_counter()
        _, iters, _ = backend.cg_solve(op, b, x0, h, False, 0, alpha, 1e-8, 10_000)
        best = min(best, time.perf_counter() - t0)
    return best, iters


def run_benchmark(size=64, dims=2):
    """Time the Poisson and Helmholtz CG solves on both backends."""
    cases = [("poisson", 0.0), ("helmholtz_scalar", 1e-3)]
    backends = [("numpy", numpy_backend)]
    if cython_backend is not None:
        backends.append(("cython", cython_backend))
    rows = []
    for op, alpha in cases:
        row = {"op": op, "size": size, "dims": dims}
        for name, backend in backends:
            seconds, iters = _bench_solver(backend, op, size, dims, alpha)
            row[f"{name}_seconds"] = seconds
            row[f"{name}_iters"] = iters
        if "cython_seconds" in row:
            row["speedup"] = row["numpy_seconds"] / row["cython_seconds"]
        rows.append(row)
    return rows


def format_benchmark(rows):
    lines = []
    for row in rows:
        parts = [f"{row['op']:>16s}  {row['dims']}D n={row['size']}"]
        for name in ("numpy", "cython"):
            key = f"{name}_seconds"
            if key in row:
                parts.append(f"{name}: {row[key] * 1e3:8.2f} ms ({row[f'{name}_iters']} it)")
        if "speedup" in row:
            parts.append(f"speedup {row['speedup']:.1f}x")
        lines.append("  ".join(parts))
    return "\n".join(lines)
