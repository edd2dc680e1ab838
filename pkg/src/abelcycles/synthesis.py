"""Coefficient synthesis: combinations with prescribed zeros, and the way back
from M1 coefficients to equation data.

The realization bases are the kernel families whose ECT property bounds the
zero counts; a combination vanishing at N-1 chosen nodes therefore has
exactly those zeros (checked, not assumed).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import mpmath
import numpy as np

from .chebyshev import (
    ZeroReport,
    count_zeros,
    one_sided_d_family,
    power_family,
)
from .domain import (
    TWO_PI,
    AbelEquation,
    CaseTag,
    DomainError,
    NumericalError,
    alpha_of,
    case_of,
    parse_angle,
    real_normalized_scale,
)
from .melnikov import chebyshev_nodes, m1_combination, split_intervals
from .quadrature import MP_DPS, CONST, BasisTerm, C, ExtendedBasis, LinearCombination, S

DEFAULT_WINDOW = (0.3, 6.0)
DEFAULT_PQ = (-1, -2)  # alpha = -1/2, the exponent the ECT checks use
GENERIC_THETA1 = math.pi / 2
NODE_TOL = 1e-8


class ConditioningError(NumericalError):
    """Interpolation system too close to singular."""


# expected counts -------------------------------------------------------------

def z1(m: int, case: CaseTag) -> int:
    if case is CaseTag.TWO_PI:
        return m + 1
    if case is CaseTag.PI:
        return 2 * m + 1
    return 3 * m + 2


def z2_lower(m: int, case: CaseTag) -> int:
    if case is CaseTag.TWO_PI:
        return 2 * m - 1
    if case is CaseTag.PI:
        return 4 * m + 1
    return 7 * m - 3


def z2_upper(m: int, case: CaseTag) -> int:
    # only the generic case has a gap between the bounds
    if case in (CaseTag.GENERIC_LOW, CaseTag.GENERIC_HIGH):
        return 9 * m - 4
    return z2_lower(m, case)


# ---------------------------------------------------------------------------
# interpolation


@dataclass
class RealizationTarget:
    basis: tuple  # BasisTerm, constant allowed
    nodes: np.ndarray
    normalization: int = -1
    domain: tuple = (0.0, math.inf)

    def __post_init__(self):
        self.basis = tuple(self.basis)
        self.nodes = np.sort(np.asarray(self.nodes, dtype=float))
        n = len(self.basis)
        if self.nodes.size != n - 1:
            raise DomainError(f"{n} basis members need {n - 1} nodes, got {self.nodes.size}")
        lo, hi = self.domain
        if np.any(self.nodes <= lo) or np.any(self.nodes >= hi):
            raise DomainError(f"nodes must lie strictly inside {self.domain}")
        if np.any(np.diff(self.nodes) <= 0):
            raise DomainError("nodes must be pairwise distinct")
        if not -n <= self.normalization < n:
            raise DomainError("normalization index out of range")


def interpolate_coefficients(target: RealizationTarget, window: Optional[Sequence[float]] = None,
                             n0: int = 256, dps: int = MP_DPS):
    """Coefficients with the combination vanishing at the target nodes and the
    pinned coefficient equal to 1, plus a zero count on ``window``.

    Everything runs in mpmath: the interpolation matrices of these families
    are routinely worse than 1e12-conditioned, and a combination with many
    prescribed zeros is a massive cancellation of its terms.
    Returns (coefficients as mpf list, ZeroReport, condition number).
    """
    n = len(target.basis)
    if window is None:
        span = target.nodes[-1] - target.nodes[0] if n > 2 else 1.0
        window = (max(target.nodes[0] - 0.05 * span, _inner(target.domain[0])),
                  min(target.nodes[-1] + 0.05 * span, _inner(target.domain[1], upper=True)))
    window = (min(window[0], target.nodes[0]) if n > 1 else window[0],
              max(window[1], target.nodes[-1]) if n > 1 else window[1])
    ext = ExtendedBasis(target.basis, window, dps=dps)
    with mpmath.workdps(dps):
        A = mpmath.zeros(n, n)
        if n > 1:
            M = ext.matrix(target.nodes)
            for i in range(n - 1):
                for j in range(n):
                    A[i, j] = M[i, j]
        A[n - 1, target.normalization % n] = 1
        norms = [mpmath.norm(A.column(j)) or mpmath.mpf(1) for j in range(n)]
        for j in range(n):
            for i in range(n):
                A[i, j] /= norms[j]
        try:
            inv = mpmath.inverse(A)
        except ZeroDivisionError:
            raise ConditioningError("interpolation matrix is singular") from None
        cond = float(mpmath.mnorm(A, 1) * mpmath.mnorm(inv, 1))
        if not math.isfinite(cond) or cond > 10.0 ** (dps - 15):
            raise ConditioningError(
                f"interpolation matrix condition {cond:.2e} exceeds what {dps} digits resolve"
            )
        coefs = [inv[j, n - 1] / norms[j] for j in range(n)]
    comb = ext.combination(coefs)
    # mp values carry their sign reliably, so no relative dead band
    report = count_zeros(comb, window, n0=n0, tol=0.0)
    return coefs, report, cond


def _inner(x: float, upper: bool = False) -> float:
    if math.isinf(x):
        return x
    return x - 1e-3 if upper else x + 1e-3


# ---------------------------------------------------------------------------
# realization bases


def _theta1_for(case: CaseTag, theta1: Optional[float]) -> float:
    if theta1 is not None:
        theta1 = parse_angle(theta1)
        if case_of(theta1) is not case:
            raise DomainError(f"theta1={theta1} does not belong to case {case.value}")
        return theta1
    return {CaseTag.PI: math.pi, CaseTag.TWO_PI: TWO_PI,
            CaseTag.GENERIC_HIGH: 5 * math.pi / 4}.get(case, GENERIC_THETA1)


def order1_basis(m: int, theta1: float, alpha: float) -> list[BasisTerm]:
    """Constant followed by the M1 kernels, sines in decreasing order."""
    case = case_of(theta1)
    if case is CaseTag.TWO_PI:
        E = (0.0, math.pi)
        return [CONST] + [C(k, E, alpha) for k in range(m + 1)]
    if case is CaseTag.PI:
        E = (0.0, math.pi)
        return [CONST] + [C(k, E, alpha) for k in range(m + 1)] + [S(k, E, alpha) for k in range(m, 0, -1)]
    E1, E2 = split_intervals(theta1)
    return ([CONST] + [C(k, E1, alpha) for k in range(m + 1)]
            + [S(k, E1, alpha) for k in range(m, 0, -1)]
            + [C(k, E2, alpha) for k in range(m + 1)])


def order2_basis(m: int, theta1: float, alpha: float) -> list[BasisTerm]:
    """Lower-bound bases for M2.

    generic: the reduced subfamily with D-kernels on E1 only and no constant;
    theta1 = pi: constant, the two power terms, C0..C_{2m-1}, S_{2m-1}..S1;
    theta1 = 2pi: C0..C_{2m-1}.
    """
    case = case_of(theta1)
    if case is CaseTag.TWO_PI:
        E = (0.0, math.pi)
        return [C(k, E, alpha) for k in range(2 * m)]
    if case is CaseTag.PI:
        return list(power_family(m, alpha).members)
    E1, _ = split_intervals(theta1)
    return list(one_sided_d_family(m, 2 * m - 1, E1[1], alpha).members)


# ---------------------------------------------------------------------------
# records


@dataclass
class Realization:
    m: int
    case: CaseTag
    order: int
    theta1: float
    p: int
    q: int
    basis: list
    coefs: np.ndarray
    nodes: np.ndarray
    window: tuple
    zeros: ZeroReport
    expected: int
    node_error: float = field(default=math.nan)
    cond: float = field(default=math.nan)
    exact: list = field(default_factory=list)  # mpf coefficients

    @property
    def achieved(self) -> int:
        return self.zeros.simple_count

    @property
    def ok(self) -> bool:
        return bool(self.zeros.certified and self.achieved == self.expected and self.node_error <= NODE_TOL)

    def combination(self) -> LinearCombination:
        """Double precision combination; fine for small families only, the
        cancellation in large ones swamps the quadrature error."""
        return LinearCombination.from_arrays(self.coefs, self.basis, (0.0, math.inf))

    def extended(self, window: Optional[Sequence[float]] = None):
        coefs = self.exact or [float(c) for c in self.coefs]
        return ExtendedBasis(self.basis, window or self.window).combination(coefs)

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "case": self.case.value,
            "order": self.order,
            "theta1": self.theta1,
            "p": self.p,
            "q": self.q,
            "basis": [t.to_json() for t in self.basis],
            "labels": [t.label() for t in self.basis],
            "coefficients": [float(c) for c in self.coefs],
            "coefficients_exact": [mpmath.nstr(c, MP_DPS) for c in self.exact],
            "condition": self.cond,
            "nodes": [float(x) for x in self.nodes],
            "window": list(self.window),
            "expected": self.expected,
            "achieved": self.achieved,
            "node_error": self.node_error,
            "ok": self.ok,
            "zeros": self.zeros.to_json(),
        }


def realize_table1(m: int, case, order: int = 1, p: int = DEFAULT_PQ[0], q: int = DEFAULT_PQ[1],
                   theta1: Optional[float] = None, window: Sequence[float] = DEFAULT_WINDOW,
                   strict: bool = True) -> Realization:
    """Build the case's basis, put N-1 nodes at Chebyshev points of ``window``,
    interpolate and count.  With ``strict`` an AssertionError is raised when
    the count or the node positions are off."""
    case = CaseTag(case)
    if m < 1:
        raise DomainError("m must be >= 1")
    if order not in (1, 2):
        raise DomainError("order must be 1 or 2")
    theta1 = _theta1_for(case, theta1)
    alpha = float(alpha_of(p, q))
    basis = order1_basis(m, theta1, alpha) if order == 1 else order2_basis(m, theta1, alpha)
    expected = z1(m, case) if order == 1 else z2_lower(m, case)
    lo, hi = float(window[0]), float(window[1])
    if not 0 < lo < hi:
        raise DomainError("realizations live on a window of the positive branch")
    nodes = chebyshev_nodes(lo, hi, len(basis) - 1) if len(basis) > 1 else np.zeros(0)
    target = RealizationTarget(tuple(basis), nodes)
    exact, report, cond = interpolate_coefficients(target, window=(lo, hi))
    coefs = np.array([float(c) for c in exact])
    if report.count == nodes.size and nodes.size:
        err = float(np.max(np.abs(np.sort(report.roots) - target.nodes)))
    else:
        err = 0.0 if not nodes.size and report.count == 0 else math.inf
    rec = Realization(m, case, order, theta1, p, q, basis, coefs, target.nodes, (lo, hi), report,
                      expected, err, cond, exact)
    if strict:
        assert rec.ok, (
            f"realization m={m} {case.value} order {order}: {rec.achieved} zeros "
            f"(expected {expected}), certified={report.certified}, node error {err:.2e}"
        )
    return rec


# ---------------------------------------------------------------------------
# M1 coefficients -> equation


def m1_layout(m: int, theta1: float, alpha: float) -> list[BasisTerm]:
    """Term order used by ``m1_combination``."""
    probe = AbelEquation.build(DEFAULT_PQ[0], DEFAULT_PQ[1], m, theta1)
    return [BasisTerm(t.kind, t.k, t.E, alpha) if t.is_kernel else t for t in m1_combination(probe).basis]


def to_m1_layout(coefs: Sequence[float], basis: Sequence[BasisTerm], m: int, theta1: float) -> np.ndarray:
    """Re-index a coefficient vector given against ``basis`` into the M1 layout."""
    theta1 = parse_angle(theta1)
    alpha = next((t.beta for t in basis if t.is_kernel), 0.0)
    layout = m1_layout(m, theta1, alpha)
    pos = {_key(t): i for i, t in enumerate(layout)}
    out = np.zeros(len(layout))
    for c, t in zip(coefs, basis):
        key = _key(t)
        if key not in pos:
            raise DomainError(f"term {t.label()} is not part of the first-order basis for this case")
        out[pos[key]] += float(c)
    return out


def _key(t: BasisTerm):
    if not t.is_kernel:
        return (t.kind,)
    return (t.kind, t.k, round(t.E[0], 12), round(t.E[1], 12))


def m1_to_equation(coeffs, theta1, p: int, q: int, m: Optional[int] = None) -> AbelEquation:
    """Equation (P1, Q1 only) whose M1 has the given coefficients.

    ``coeffs`` is either a vector in the ``m1_combination`` layout or a
    LinearCombination.  Gauge: minus-zone sine coefficients of Q1 are zero.
    """
    theta1 = parse_angle(theta1)
    case = case_of(theta1)
    if isinstance(coeffs, LinearCombination):
        if m is None:
            m = max((t.k for t in coeffs.basis if t.is_kernel), default=0)
        vec = to_m1_layout(coeffs.coefs, coeffs.basis, m, theta1)
    else:
        vec = np.asarray(coeffs, dtype=float).ravel()
        size_to_m = {
            CaseTag.TWO_PI: lambda n: n - 2,
            CaseTag.PI: lambda n: (n - 2) // 2,
        }.get(case, lambda n: (n - 3) // 3)
        mm = size_to_m(vec.size)
        if m is None:
            m = mm
        expected = {CaseTag.TWO_PI: m + 2, CaseTag.PI: 2 * m + 2}.get(case, 3 * m + 3)
        if vec.size != expected or m < 0:
            raise DomainError(f"{vec.size} coefficients do not fit the first-order layout of case {case.value}")
    scale = real_normalized_scale(p, alpha_of(p, q))
    p10 = vec[0]
    cp = np.zeros(m + 1)
    dp = np.zeros(m + 1)
    dm = np.zeros(m + 1)
    if case is CaseTag.TWO_PI:
        dp = dm = vec[1:m + 2] / 2.0
    elif case is CaseTag.PI:
        dp = vec[1:m + 2].copy()
        cp[1:] = vec[m + 2:2 * m + 2]
    else:
        mu1 = vec[1:m + 2]
        cp[1:] = vec[m + 2:2 * m + 2]
        mu2 = vec[2 * m + 2:3 * m + 3]
        if case is CaseTag.GENERIC_LOW:
            dm = mu2 / 2.0
            dp = mu1 - dm
        else:
            dp = mu2 / 2.0
            dm = mu1 - dp
    Qp = np.column_stack([cp, dp]) / scale
    Qm = np.column_stack([np.zeros(m + 1), dm]) / scale
    b0 = p10 / TWO_PI
    P1 = np.zeros((m + 1, 2))
    P1[0, 1] = b0
    if case is CaseTag.TWO_PI:
        Q1 = {"plus": Qp, "minus": None}
    else:
        Q1 = {"plus": Qp, "minus": Qm}
    return AbelEquation.build(p, q, m, theta1, P1={"plus": P1, "minus": P1}, Q1=Q1)


# ---------------------------------------------------------------------------
# equations with M1 identically zero


def sample_center_equation(m: int, theta1, p: int, q: int, seed: int = 0) -> AbelEquation:
    """Random equation satisfying the center conditions (and matching drive sines at theta1 = pi).

    Q2 and P2 are free.  The leading sine coefficient of Q1 is kept away from 0.
    """
    theta1 = parse_angle(theta1)
    case = case_of(theta1)
    rng = np.random.default_rng(seed)
    scale = real_normalized_scale(p, alpha_of(p, q))
    c = np.zeros(m + 1)
    if m >= 1:
        c[1:] = rng.normal(size=m)
        c[m] = math.copysign(0.5 + abs(c[m]), c[m])
    Qp = np.column_stack([c, np.zeros(m + 1)])
    Qm = Qp.copy()
    if case is CaseTag.PI:
        d = rng.normal(size=m + 1)
        Qp[:, 1] = d
        Qm[:, 1] = -d
    P1p = rng.normal(size=(m + 1, 2))
    P1m = rng.normal(size=(m + 1, 2))
    if case is CaseTag.PI:
        P1m[:, 0] = P1p[:, 0]
    P2p = rng.normal(size=(m + 1, 2))
    P2m = rng.normal(size=(m + 1, 2))
    Q2p = rng.normal(size=(m + 1, 2))
    Q2m = rng.normal(size=(m + 1, 2))
    if case is CaseTag.TWO_PI:
        P1m, P2m, Q2m, Qm = P1p, P2p, Q2p, Qp
    # row 0 sine slots carry nothing
    for t in (P1p, P1m, P2p, P2m, Q2p, Q2m):
        t[0, 0] = 0.0
    # kill p10 through the constant cos terms
    t1 = min(theta1, TWO_PI)
    p10 = (P1p[0, 1] * t1 + P1m[0, 1] * (TWO_PI - t1)
           + _sin_cos_integral(P1p, 0.0, t1) + _sin_cos_integral(P1m, t1, TWO_PI))
    if case is CaseTag.TWO_PI:
        P1p[0, 1] -= p10 / TWO_PI
        P1m = P1p
    else:
        P1m[0, 1] -= p10 / (TWO_PI - t1)
    return AbelEquation.build(
        p, q, m, theta1,
        P1={"plus": P1p, "minus": P1m},
        P2={"plus": P2p, "minus": P2m},
        Q1={"plus": Qp / scale, "minus": Qm / scale},
        Q2={"plus": Q2p, "minus": Q2m},
    )


def _sin_cos_integral(table: np.ndarray, a: float, b: float) -> float:
    k = np.arange(1, table.shape[0])
    if not k.size:
        return 0.0
    s = table[1:, 0] * (np.cos(k * a) - np.cos(k * b)) / k
    c = table[1:, 1] * (np.sin(k * b) - np.sin(k * a)) / k
    return float(np.sum(s + c))


def sample_equation(m: int, theta1, p: int, q: int, seed: int = 0,
                    with_second_order: bool = True) -> AbelEquation:
    """Random equation with standard normal coefficients in every zone."""
    theta1 = parse_angle(theta1)
    rng = np.random.default_rng(seed)

    def zones():
        plus = rng.normal(size=(m + 1, 2))
        minus = rng.normal(size=(m + 1, 2))
        plus[0, 0] = minus[0, 0] = 0.0
        if case_of(theta1) is CaseTag.TWO_PI:
            minus = plus
        return {"plus": plus, "minus": minus}

    P1, Q1 = zones(), zones()
    P2, Q2 = (zones(), zones()) if with_second_order else (None, None)
    return AbelEquation.build(p, q, m, theta1, P1=P1, P2=P2, Q1=Q1, Q2=Q2)
