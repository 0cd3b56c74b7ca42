"""Per-step functionals tracked by the a priori estimates, and the
inequality residuals and blow-up indicator built from them.

Every functional the analysis bounds (masses, L^p energies, gradient
dissipations, the combined energy functional, sup norms) is computed each
step so the bounds can be asserted numerically. Inequality constants are
never hard-coded; they are estimated from the run itself.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .fluid import kinetic_energy, viscous_dissipation
from .grid import divergence, gradient, integrate, scalar_l2, scalar_to_faces

ENTROPY_FLOOR = 1e-300


@dataclass
class DiagnosticsRecord:
    t: float
    mass_n: float
    mass_c: float
    lp_n: dict = field(default_factory=dict)
    l2_c: float = 0.0
    l2_u: float = 0.0
    dissipation_n: float = 0.0
    dissipation_c: float = 0.0
    dissipation_u: float = 0.0
    entropy_n: float = 0.0
    sup_n: float = 0.0
    grad_c_sup: float = 0.0
    grad_u_sup: float = 0.0
    div_residual: float = 0.0
    energy_E: float = 0.0


def lp_norm(f, p):
    """(integral of f^p)^(1/p); p = inf returns the max norm.

    Fractional p requires a nonnegative field."""
    vals = f.values
    if math.isinf(p):
        return float(np.max(np.abs(vals)))
    if not (p > 0):
        raise DomainError(f"lp_norm requires p > 0, got {p}")
    if p != int(p) and np.min(vals) < 0.0:
        raise DomainError("lp_norm with fractional p requires a nonnegative field")
    return float(np.sum(np.abs(vals) ** p) * f.grid.cell_volume) ** (1.0 / p)


def lp_integral(f, p):
    """integral of f^p (the raw functional, not the norm)."""
    vals = f.values
    if p != int(p) and np.min(vals) < 0.0:
        raise DomainError("lp_integral with fractional p requires a nonnegative field")
    return float(np.sum(np.abs(vals) ** p) * f.grid.cell_volume)


def lp_probes(params):
    """Exponents tracked per record: the energy exponent 2*alpha, the
    bootstrap exponent 2*alpha + 2, and fixed probes 13/8 and 2."""
    probes = {2.0 * params.alpha, 2.0 * params.alpha + 2.0, 13.0 / 8.0, 2.0}
    return tuple(sorted(p for p in probes if p > 0.0))


def weighted_n_dissipation(n, alpha):
    """integral of n^(2 alpha - 2) |grad n|^2 with face-averaged density;
    faces where the density underflows contribute zero (0 * inf := 0)."""
    grid = n.grid
    expo = 2.0 * alpha - 2.0
    g = gradient(n)
    total = 0.0
    for d in range(grid.dims):
        gd = g.components[d]
        n_face = scalar_to_faces(n, d)
        if expo == 0.0:
            w = np.ones_like(n_face)
        else:
            safe = np.maximum(n_face, ENTROPY_FLOOR)
            w = np.where(n_face > ENTROPY_FLOOR, safe**expo, 0.0)
        total += float(np.sum(w * gd * gd))
    return total * grid.cell_volume


def entropy(n):
    """integral of n log n, with 0 log 0 := 0."""
    vals = n.values
    safe = np.maximum(vals, ENTROPY_FLOOR)
    terms = np.where(vals > ENTROPY_FLOOR, vals * np.log(safe), 0.0)
    return float(np.sum(terms)) * n.grid.cell_volume


def energy_functional(state, params):
    """The combined density/signal energy functional.

    For 2*alpha != 1: sign(2a-1)/(2a) * int n^{2a} + |2a-1| c_s^2 * int c^2.
    The 2*alpha = 1 branch degenerates to the entropy int n log n plus a
    (1/2) c_s^2 weighted int c^2.
    """
    if not (params.alpha > 0.0):
        raise DomainError("energy_functional requires alpha > 0")
    two_a = 2.0 * params.alpha
    c2 = lp_integral(state.c, 2.0)
    if abs(two_a - 1.0) < 1e-14:
        return entropy(state.n) + 0.5 * params.c_s**2 * c2
    sign = 1.0 if two_a > 1.0 else -1.0
    return sign / two_a * lp_integral(state.n, two_a) + abs(two_a - 1.0) * params.c_s**2 * c2


def dissipation_weight(params):
    """Smallest coefficient multiplying the gradient dissipations in the
    discrete energy inequality."""
    two_a = 2.0 * params.alpha
    if abs(two_a - 1.0) < 1e-14:
        return min(0.5, 0.5 * params.c_s**2)
    return min(abs(two_a - 1.0) / 4.0, abs(two_a - 1.0) * params.c_s**2 / 2.0)


def energy_inequality_residual(prev, nxt, params, dt):
    """Left side of the discrete energy inequality between two consecutive
    records: (E_next - E_prev)/dt plus the weighted gradient dissipations.
    Bounded runs keep this below a run-estimated constant."""
    w = dissipation_weight(params)
    return (nxt.energy_E - prev.energy_E) / dt + w * (nxt.dissipation_n + nxt.dissipation_c)


def blowup_indicator(history, window):
    """Exponential growth rate of sup_n + sup|grad c| + sup|grad u| fitted by
    least squares on log values over the trailing window. Nonpositive values
    make the log degenerate; the indicator is then 0."""
    if window < 2:
        raise DomainError("blowup_indicator requires window >= 2")
    recs = list(history)[-window:]
    if len(recs) < 2:
        return 0.0
    ys = np.array([r.sup_n + r.grad_c_sup + r.grad_u_sup for r in recs])
    ts = np.array([r.t for r in recs])
    if np.any(ys <= 0.0) or np.ptp(ts) == 0.0:
        return 0.0
    slope = np.polyfit(ts, np.log(ys), 1)[0]
    return float(slope)


def grad_u_sup(u):
    """Sup of the face-difference quotients of the velocity components; the
    discrete stand-in for |grad u|_inf in the extensibility proxy."""
    grid = u.grid
    sup = 0.0
    for d in range(grid.dims):
        comp = u.components[d]
        for e in range(grid.dims):
            h = grid.h[e]
            if grid.periodic:
                diffs = np.abs(np.roll(comp, -1, axis=e) - comp) / h
            else:
                if comp.shape[e] < 2:
                    continue
                diffs = np.abs(np.diff(comp, axis=e)) / h
            if diffs.size:
                sup = max(sup, float(np.max(diffs)))
    return sup


def compute_record(state, params):
    """Evaluate every tracked functional on the current state."""
    n, c, u = state.n, state.c, state.u
    gcomps = gradient(c)
    gc_sup = max(
        (float(np.max(np.abs(g))) for g in gcomps.components if g.size), default=0.0
    )
    diss_c = sum(float(np.sum(g * g)) for g in gcomps.components) * c.grid.cell_volume
    rec = DiagnosticsRecord(
        t=state.t,
        mass_n=integrate(n),
        mass_c=integrate(c),
        lp_n={p: lp_integral(n, p) for p in lp_probes(params)},
        l2_c=lp_integral(c, 2.0),
        l2_u=2.0 * kinetic_energy(u),
        dissipation_n=weighted_n_dissipation(n, params.alpha),
        dissipation_c=diss_c,
        dissipation_u=viscous_dissipation(u),
        entropy_n=entropy(n),
        sup_n=float(np.max(n.values)),
        grad_c_sup=gc_sup,
        grad_u_sup=grad_u_sup(u),
        div_residual=scalar_l2(divergence(u)),
        energy_E=energy_functional(state, params) if params.alpha > 0.0 else 0.0,
    )
    return rec


def csv_header(params):
    cols = ["t", "mass_n", "mass_c"]
    cols += [f"lp_n_{p:.17g}" for p in lp_probes(params)]
    cols += [
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
    ]
    return cols


def csv_row(rec, params):
    vals = [rec.t, rec.mass_n, rec.mass_c]
    vals += [rec.lp_n[p] for p in lp_probes(params)]
    vals += [
        rec.l2_c,
        rec.l2_u,
        rec.dissipation_n,
        rec.dissipation_c,
        rec.dissipation_u,
        rec.entropy_n,
        rec.sup_n,
        rec.grad_c_sup,
        rec.grad_u_sup,
        rec.div_residual,
        rec.energy_E,
    ]
    return [f"{v:.17g}" for v in vals]


def write_csv(records, params, path):
    """One row per record, 17 significant digits, deterministic order."""
    lines = [",".join(csv_header(params))]
    for rec in records:
        lines.append(",".join(csv_row(rec, params)))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
