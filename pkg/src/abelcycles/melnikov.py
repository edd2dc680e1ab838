"""First and second order Melnikov functions.

M1 is assembled exactly as a combination of kernel integrals.  M2 has two
independent evaluations: a direct one (nested quadrature of the variational
formula, valid for any equation) and a structured one, which fits the direct
values onto the kernel basis predicted for equations with M1 ≡ 0 and
certifies the fit residual.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .domain import (
    TWO_PI,
    AbelEquation,
    CaseTag,
    DomainError,
    NumericalError,
    center_conditions,
    sine_terms_match,
)
from .estimators import StructuredM2Regressor
from .quadrature import (
    CONST,
    BasisTerm,
    Kind,
    LinearCombination,
    C,
    D,
    S,
    panel_rule,
    singularity_distance,
)

STRUCTURE_TOL = 1e-7
POSITIVE_WINDOW = (0.2, 8.0)
NEGATIVE_WINDOW = (-10.0, -2.2)
GL_ORDER = 20
MAX_PANEL = 0.25
RHO_BLOCK = 256


class StructuralError(NumericalError):
    """A fitted structured form failed to reproduce the direct values."""


@dataclass
class MelnikovResult:
    order: int
    form: object  # LinearCombination or a callable rho -> values
    case: CaseTag
    residual: Optional[float] = None
    window: Optional[tuple] = None
    info: dict = field(default_factory=dict)

    @property
    def structured(self) -> bool:
        return isinstance(self.form, LinearCombination)

    def __call__(self, rho):
        return np.asarray(self.form(rho), dtype=float)


# ---------------------------------------------------------------------------
# intervals and branches


def split_intervals(theta1: float) -> tuple[tuple, tuple]:
    """(E1, E2) on which the switching-line combinations live."""
    if theta1 <= math.pi:
        return (0.0, theta1), (theta1, math.pi)
    phi = TWO_PI - theta1
    return (0.0, phi), (phi, math.pi)


def branches(eq: AbelEquation) -> list[tuple]:
    return list(eq.annulus().y_intervals)


def pick_branch(eq: AbelEquation, branch: Optional[str] = None) -> tuple:
    ivs = branches(eq)
    pos = [iv for iv in ivs if iv[0] >= 0]
    neg = [iv for iv in ivs if iv[1] <= -2]
    if branch in (None, "positive") and pos:
        return pos[0]
    if branch in (None, "negative") and neg:
        return neg[0]
    raise DomainError(f"no {branch} branch in the annulus {ivs}")


def default_window(interval: tuple) -> tuple:
    return POSITIVE_WINDOW if interval[0] >= 0 else NEGATIVE_WINDOW


def _check_rho(eq: AbelEquation, rho: np.ndarray):
    ann = eq.annulus()
    bad = [r for r in rho if not ann.contains(float(r))]
    if bad:
        raise DomainError(f"rho={bad[0]!r} is outside the annulus {ann.y_intervals}")


# ---------------------------------------------------------------------------
# M1


def m1_combination(eq: AbelEquation, branch: Optional[str] = None) -> LinearCombination:
    """M1 as p10 + kernel combination.

    All structural terms are kept, including ones with zero coefficient, so
    coefficient vectors have a fixed layout per (case, m).  Use ``.pruned()``
    to drop zeros.
    """
    a = float(eq.alpha)
    m = eq.m
    q = eq.Q1t
    cp, dp = q.plus[:, 0], q.plus[:, 1]
    cm, dm = q.minus[:, 0], q.minus[:, 1]
    terms = [(eq.p10, CONST)]
    case = eq.case
    if case is CaseTag.TWO_PI:
        E = (0.0, math.pi)
        terms += [(2 * dp[k], C(k, E, a)) for k in range(m + 1)]
    elif case is CaseTag.PI:
        E = (0.0, math.pi)
        terms += [(dp[k] + dm[k], C(k, E, a)) for k in range(m + 1)]
        terms += [(cp[k] - cm[k], S(k, E, a)) for k in range(1, m + 1)]
    else:
        E1, E2 = split_intervals(eq.theta1)
        d2 = dm if case is CaseTag.GENERIC_LOW else dp
        terms += [(dp[k] + dm[k], C(k, E1, a)) for k in range(m + 1)]
        terms += [(cp[k] - cm[k], S(k, E1, a)) for k in range(1, m + 1)]
        terms += [(2 * d2[k], C(k, E2, a)) for k in range(m + 1)]
    return LinearCombination(tuple(terms), pick_branch(eq, branch))


def m1_direct(eq: AbelEquation, rho) -> np.ndarray:
    """p10 + ∫ Q̃1 |y0|^α by composite Gauss-Legendre; an oracle for M1."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    _check_rho(eq, rho)
    a = float(eq.alpha)
    out = np.empty(rho.shape)
    for s in range(0, rho.size, RHO_BLOCK):
        r = rho[s:s + RHO_BLOCK]
        rule = _rule(eq, r)
        y = np.abs(1.0 + r - np.cos(rule.nodes)[..., None])
        out[s:s + RHO_BLOCK] = eq.p10 + rule.integrate(eq.Q1t(rule.nodes)[..., None] * y**a)
    return out


# ---------------------------------------------------------------------------
# M2 direct


def _rule(eq: AbelEquation, rho: np.ndarray):
    delta = singularity_distance(rho)
    breaks = sorted({0.0, min(eq.theta1, TWO_PI), math.pi, TWO_PI})
    return panel_rule(breaks, min(MAX_PANEL, 0.5 * delta), GL_ORDER)


def _m2_parts(eq: AbelEquation, rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = float(eq.alpha)
    rule = _rule(eq, rho)
    th = rule.nodes
    sgn = np.where(rho > 0, 1.0, -1.0)
    y = np.abs(1.0 + rho - np.cos(th)[..., None])
    ya = y**a
    q1 = eq.Q1t(th)[..., None]
    q2 = eq.Q2t(th)[..., None]
    L1 = rule.cumulative(q1 * ya)
    S1 = eq.P1.primitive(th)[..., None] + L1
    weight = a * sgn * q1 * y ** (a - 1.0)
    m2 = eq.p20 + rule.integrate(q2 * ya + weight * S1)
    double = rule.integrate(weight * L1) / a if a else np.zeros(rho.shape)
    return m2, double


def m2_direct(eq: AbelEquation, rho) -> np.ndarray:
    """Second-order displacement coefficient by nested quadrature.

    M2(ρ) = p20 + ∫ [Q̃2 |y0|^α + α s Q̃1 |y0|^(α-1) Ŝ1] dθ with s the sign of
    y0 and Ŝ1(θ) = ∫_0^θ (P1 + Q̃1 |y0|^α).  No center condition is assumed.
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    _check_rho(eq, rho)
    out = np.empty(rho.shape)
    for s in range(0, rho.size, RHO_BLOCK):
        out[s:s + RHO_BLOCK] = _m2_parts(eq, rho[s:s + RHO_BLOCK])[0]
    return out


def q1_double_integral(eq: AbelEquation, rho) -> np.ndarray:
    """∫ s Q̃1 |y0|^(α-1) (∫_0^θ Q̃1 |y0|^α) dθ, which vanishes when M1 ≡ 0."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    _check_rho(eq, rho)
    return np.concatenate(
        [_m2_parts(eq, rho[s:s + RHO_BLOCK])[1] for s in range(0, rho.size, RHO_BLOCK)]
    )


def s1_hat(eq: AbelEquation, theta, rho: float) -> np.ndarray:
    """Ŝ1(θ, ρ) = ∫_0^θ (P1 + Q̃1 |y0|^α); exactly 0 at θ = 0."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    r = np.array([float(rho)])
    _check_rho(eq, r)
    if np.any((theta < 0) | (theta > TWO_PI + 1e-12)):
        raise DomainError("theta must lie in [0, 2pi]")
    a = float(eq.alpha)
    delta = singularity_distance(r)
    out = np.zeros(theta.shape)
    for i, t in enumerate(theta):
        if t <= 0:
            continue
        brk = [0.0, t] + [b for b in (eq.theta1, math.pi) if b < t]
        rule = panel_rule(brk, min(MAX_PANEL, 0.5 * delta), GL_ORDER)
        y = np.abs(1.0 + r[0] - np.cos(rule.nodes))
        out[i] = float(rule.integrate(eq.Q1t(rule.nodes) * y**a)) + float(eq.P1.primitive(t))
    return out


def m2_direct_result(eq: AbelEquation) -> MelnikovResult:
    return MelnikovResult(2, lambda rho: m2_direct(eq, rho), eq.case)


# ---------------------------------------------------------------------------
# m2 integrand (dual formula)


def _v_cos_coefs(c: np.ndarray) -> np.ndarray:
    """Cosine coefficients of Σ_k c_k U_{k-1}(cos θ)."""
    m = c.size - 1
    v = np.zeros(max(m, 1))
    for k in range(1, m + 1):
        j = k - 1
        if j % 2 == 0:
            v[0] += c[k]
        for i in range(j, 0, -2):
            v[i] += 2.0 * c[k]
    return v


def m2_integrand(eq: AbelEquation, theta) -> np.ndarray:
    """m2(θ) = Q̃2 - (R / sin θ)' with R = Q̃1 ∫_0^θ P1.

    Under M1 ≡ 0 (θ1 ≠ π) Q̃1 = sin θ · V(cos θ) with V a polynomial, so the
    quotient is V·F (F the primitive of P1) and the derivative is analytic.
    """
    ok, why = center_conditions(eq)
    if not ok:
        raise DomainError("m2 integrand needs M1 ≡ 0: " + ", ".join(why))
    if eq.case is CaseTag.PI:
        raise DomainError("m2 integrand is not defined for theta1 = pi")
    theta = np.asarray(theta, dtype=float)
    v = _v_cos_coefs(eq.Q1t.plus[:, 0])
    i = np.arange(v.size)
    it = np.multiply.outer(theta, i)
    V = np.cos(it) @ v
    dV = -(np.sin(it) @ (i * v))
    F = eq.P1.primitive(theta)
    return eq.Q2t(theta) - dV * F - V * eq.P1(theta)


def m2_via_integrand(eq: AbelEquation, rho) -> np.ndarray:
    """p20 + ∫ m2(θ) |y0|^α dθ."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    _check_rho(eq, rho)
    a = float(eq.alpha)
    rule = _rule(eq, rho)
    y = np.abs(1.0 + rho - np.cos(rule.nodes)[..., None])
    return eq.p20 + rule.integrate(m2_integrand(eq, rule.nodes)[..., None] * y**a)


# ---------------------------------------------------------------------------
# M2 structured


def m2_basis(eq: AbelEquation) -> list[BasisTerm]:
    a = float(eq.alpha)
    m = eq.m
    case = eq.case
    if case is CaseTag.TWO_PI:
        E = (0.0, math.pi)
        return [CONST] + [C(k, E, a) for k in range(2 * m)]
    if case is CaseTag.PI:
        E = (0.0, math.pi)
        return (
            [CONST, BasisTerm(Kind.POW_RHO, beta=a), BasisTerm(Kind.POW_RHO2, beta=a)]
            + [S(k, E, a) for k in range(1, 2 * m)]
            + [C(k, E, a) for k in range(2 * m)]
        )
    E1, E2 = split_intervals(eq.theta1)
    return (
        [CONST]
        + [D(k, E1, a) for k in range(1, m)]
        + [D(k, E2, a) for k in range(1, m)]
        + [S(k, E1, a) for k in range(1, 2 * m)]
        + [S(k, E2, a) for k in range(1, m)]
        + [C(k, E1, a) for k in range(2 * m)]
        + [C(k, E2, a) for k in range(2 * m)]
    )


def chebyshev_nodes(lo: float, hi: float, n: int) -> np.ndarray:
    j = np.arange(n)
    x = np.cos(math.pi * (2 * j + 1) / (2 * n))[::-1]
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * x


def m2_structured(
    eq: AbelEquation,
    branch: Optional[str] = None,
    window: Optional[tuple] = None,
    n_nodes: Optional[int] = None,
    tol: float = STRUCTURE_TOL,
) -> MelnikovResult:
    """Fit M2 onto the kernel basis expected when M1 ≡ 0 and certify the fit."""
    ok, why = center_conditions(eq)
    if not ok:
        raise DomainError("structured M2 needs M1 ≡ 0: " + ", ".join(why))
    if eq.case is CaseTag.PI and not sine_terms_match(eq):
        raise DomainError("structured M2 at theta1 = pi needs a1k⁺ = a1k⁻")
    interval = pick_branch(eq, branch)
    lo, hi = window or default_window(interval)
    if not (interval[0] < lo < hi < interval[1]):
        raise DomainError(f"fit window {(lo, hi)} not inside the branch {interval}")
    basis = m2_basis(eq)
    n = n_nodes or 2 * len(basis) + 10
    if n < len(basis) + 5:
        raise DomainError(f"need at least {len(basis) + 5} fit nodes")
    nodes = chebyshev_nodes(lo, hi, n)
    values = m2_direct(eq, nodes)
    reg = StructuredM2Regressor(basis=tuple(basis)).fit(nodes[:, None], values)
    if reg.residual_ > tol:
        raise StructuralError(f"structured M2 fit residual {reg.residual_:.3g} exceeds {tol:g}")
    lc = LinearCombination.from_arrays(reg.coef_, basis, interval)
    return MelnikovResult(
        2, lc, eq.case, residual=reg.residual_, window=(lo, hi),
        info={"rank": reg.rank_, "n_nodes": n},
    )


def eval_combination(lc: LinearCombination, rho) -> np.ndarray:
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    lo, hi = lc.domain
    if np.any((rho <= lo) | (rho >= hi)):
        raise DomainError(f"rho outside the combination domain {lc.domain}")
    return lc(rho)
