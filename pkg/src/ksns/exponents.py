"""Exact rational verification of the interpolation and Young-exponent
conditions underlying the boundedness estimates.

Everything here is arbitrary-precision `fractions.Fraction` arithmetic; no
floating point enters. The central object is the displayed two-term
exponent inequality with parameters p = 13/8, theta = 3/2, theta' = 3 and a
sought witness l0 in (59/20, 3); `lemma_l0_feasibility` searches a rational
mesh for a witness and certifies the answer either way.

The two terms are the second-order interpolation exponents

    a       = (5/6 - 1/(theta' B)) / (7/6 - 1/B),        B = p + 1 - alpha,
    a_tilde = (1/l0 - 1/(theta B)) / (1/l0 + 2/3 - 1/B),

and the inequality asks a + a_tilde < 1. Exact monotonicity (a_tilde is
strictly decreasing in l0) reduces the search to the mesh point closest
to 3; the exhaustive mesh scan is kept as a cross-check oracle in the test
suite.
"""

from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError

THETA = Fraction(3, 2)
THETA_PRIME = Fraction(3)  # theta / (theta - 1)
P_DEFAULT = Fraction(13, 8)
WITNESS_LO = Fraction(59, 20)
WITNESS_HI = Fraction(3)
ALPHA_LO = Fraction(1, 3)
ALPHA_HI = Fraction(3, 4)
DEFAULT_MESH_DENOMINATOR = 10**4


def critical_alpha(n_dims):
    """The critical saturation exponent 1 - 2/N, exactly."""
    if n_dims <= 0:
        raise DomainError(f"dimension must be positive, got {n_dims}")
    return Fraction(n_dims - 2, n_dims)


def stokes_admissible(l, r):
    """Exact evaluation of the velocity-gradient integrability condition:
    l < 3r/(3-r) when r <= 3, unconditional when r > 3."""
    l = Fraction(l)
    r = Fraction(r)
    if l < 1 or r < 1:
        raise DomainError("stokes_admissible requires l >= 1 and r >= 1")
    if r > 3:
        return True
    if r == 3:
        return True
    return l < 3 * r / (3 - r)


def _b_of(p, alpha):
    return Fraction(p) + 1 - Fraction(alpha)


def bracket_holds(p, alpha):
    """The proof's bracketing 24/55 < 1/(p+1-alpha) <= 8/15, exactly."""
    inv_b = 1 / _b_of(p, alpha)
    return Fraction(24, 55) < inv_b <= Fraction(8, 15)


def gn_coefficient_a(p, alpha, theta_prime=THETA_PRIME):
    """First interpolation exponent a; in (0,1) exactly when p+1-alpha > 2."""
    b = _b_of(p, alpha)
    return (Fraction(5, 6) - 1 / (theta_prime * b)) / (Fraction(7, 6) - 1 / b)


def gn_coefficient_a_tilde(p, alpha, l0, theta=THETA):
    """Second interpolation exponent a~ for a given witness l0."""
    b = _b_of(p, alpha)
    x = 1 / Fraction(l0)
    return (x - 1 / (theta * b)) / (x + Fraction(2, 3) - 1 / b)


def one_minus_a_tilde(p, alpha, l0):
    """The proof's closed form for 1 - a~; an exact identity."""
    b = _b_of(p, alpha)
    return (Fraction(2, 3) - 1 / (THETA_PRIME * b)) / (
        1 / Fraction(l0) + Fraction(2, 3) - 1 / b
    )


def lemma_lhs(p, alpha, l0):
    return gn_coefficient_a(p, alpha) + gn_coefficient_a_tilde(p, alpha, l0)


def witness_mesh(denominator=DEFAULT_MESH_DENOMINATOR):
    """Rational candidates for l0 in (59/20, 3), descending from 3.

    The left side is strictly decreasing in l0, so this order meets the
    smallest achievable value first.
    """
    step = Fraction(1, denominator)
    out = []
    l0 = WITNESS_HI - step
    while l0 > WITNESS_LO:
        out.append(l0)
        l0 -= step
    return out


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    witness: Fraction
    lhs_value: Fraction
    margin: Fraction  # 1 - lhs_value at the reported point
    a_value: Fraction
    a_tilde_value: Fraction
    bracket_certified: bool


def lemma_l0_feasibility(alpha, p=P_DEFAULT, mesh_denominator=DEFAULT_MESH_DENOMINATOR):
    """Search the rational witness mesh for l0 in (59/20, 3) making the
    two-term exponent inequality strictly less than one, exactly.

    The first mesh point (closest to 3) realizes the infimum of the left
    side by exact monotonicity, so infeasibility there certifies
    infeasibility on the whole interval; the exhaustive scan is retained as
    an independent oracle in the tests.
    """
    alpha = Fraction(alpha)
    p = Fraction(p)
    if not (ALPHA_LO < alpha <= ALPHA_HI):
        raise DomainError(
            f"alpha must lie in (1/3, 3/4], got {alpha}"
        )
    bracket = bracket_holds(p, alpha)
    a = gn_coefficient_a(p, alpha)
    best = WITNESS_HI - Fraction(1, mesh_denominator)
    lhs_best = a + gn_coefficient_a_tilde(p, alpha, best)
    if lhs_best < 1:
        return FeasibilityResult(
            feasible=True,
            witness=best,
            lhs_value=lhs_best,
            margin=1 - lhs_best,
            a_value=a,
            a_tilde_value=gn_coefficient_a_tilde(p, alpha, best),
            bracket_certified=bracket,
        )
    return FeasibilityResult(
        feasible=False,
        witness=None,
        lhs_value=lhs_best,
        margin=1 - lhs_best,
        a_value=a,
        a_tilde_value=gn_coefficient_a_tilde(p, alpha, best),
        bracket_certified=bracket,
    )


def gn_interpolation_exponent(p_target, p_grad, p_low, n_dims,
                              target_order=0, grad_order=1):
    """Interpolation exponent of the Gagliardo-Nirenberg bookkeeping

        1/p_target = j/N + a (1/p_grad - m/N) + (1-a)/p_low

    with derivative orders j = target_order on the left and m = grad_order
    on the strong side. Exact; raises naming the violated constraint when
    the triple is infeasible or the exponent leaves [0, 1].
    """
    pt = Fraction(p_target)
    pg = Fraction(p_grad)
    pl = Fraction(p_low)
    n = Fraction(n_dims)
    j = Fraction(target_order)
    m = Fraction(grad_order)
    if pt <= 0 or pg <= 0 or pl <= 0:
        raise DomainError("exponents must be positive")
    denom = 1 / pl - (1 / pg - m / n)
    if denom == 0:
        raise DomainError(
            "degenerate triple: 1/p_low equals 1/p_grad - m/N, no unique exponent"
        )
    a = (1 / pl + j / n - 1 / pt) / denom
    if not (0 <= a <= 1):
        raise DomainError(
            f"interpolation exponent {a} outside [0, 1]: "
            f"1/p_target={1 / pt} is not between 1/p_low={1 / pl} and "
            f"1/p_grad - m/N + j/N = {1 / pg - m / n + j / n}"
        )
    return a


def alpha_samples(count=200):
    """``count`` exact rationals spanning (1/3, 3/4], right endpoint included."""
    span = ALPHA_HI - ALPHA_LO
    return [ALPHA_LO + Fraction(k, count) * span for k in range(1, count + 1)]


def feasibility_report(count=200, p=P_DEFAULT):
    """Per-alpha certification used by the CLI: feasibility, witness, exact
    left side, exponent memberships, bracket, and the 1 - a~ identity."""
    rows = []
    for alpha in alpha_samples(count):
        res = lemma_l0_feasibility(alpha, p=p)
        probe_l0 = res.witness if res.witness is not None else (
            WITNESS_HI - Fraction(1, DEFAULT_MESH_DENOMINATOR)
        )
        identity_ok = (
            1 - gn_coefficient_a_tilde(p, alpha, probe_l0)
            == one_minus_a_tilde(p, alpha, probe_l0)
        )
        rows.append(
            {
                "alpha": _frac_str(alpha),
                "feasible": res.feasible,
                "witness": _frac_str(res.witness) if res.witness is not None else None,
                "lhs": _frac_str(res.lhs_value),
                "margin": _frac_str(res.margin),
                "a": _frac_str(res.a_value),
                "a_tilde": _frac_str(res.a_tilde_value),
                "a_in_unit_interval": 0 < res.a_value < 1,
                "a_tilde_in_unit_interval": 0 < res.a_tilde_value < 1,
                "bracket_certified": res.bracket_certified,
                "one_minus_a_tilde_identity": identity_ok,
            }
        )
    return {
        "p": _frac_str(Fraction(p)),
        "theta": _frac_str(THETA),
        "theta_prime": _frac_str(THETA_PRIME),
        "critical_alpha_3d": _frac_str(critical_alpha(3)),
        "samples": rows,
        "feasible_count": sum(1 for r in rows if r["feasible"]),
    }


def _frac_str(x):
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"
