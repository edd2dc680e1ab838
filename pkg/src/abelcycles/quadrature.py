"""Kernel integrals C_k^E, S_k^E, D_k^E and their ρ-derivatives.

    C_k^E(ρ, β) = ∫_E cos(kθ) |1 + ρ - cos θ|^β dθ
    S_k^E(ρ, β) = ∫_E sin(kθ) |1 + ρ - cos θ|^β dθ
    D_k^E(ρ, β) = ∫_E θ sin(kθ) |1 + ρ - cos θ|^β dθ

Integration uses a globally adaptive 21-point Gauss-Kronrod rule that works on
vector-valued integrands, so a whole family of kernels on a whole ρ-grid
shares a single panel refinement.
"""
from __future__ import annotations

import enum
import math
import os
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import mpmath
import numpy as np
from numpy.polynomial import legendre

from .domain import TWO_PI, DomainError, NumericalError

EPSABS = float(os.environ.get("ABELCYCLES_EPSABS", "1e-11"))
EPSREL = float(os.environ.get("ABELCYCLES_EPSREL", "1e-10"))
LIMIT = int(os.environ.get("ABELCYCLES_QUAD_LIMIT", str(2**14)))
NEAR_BOUNDARY = 1e-6
MAX_DERIVATIVE = 24
MAX_PUBLIC_DERIVATIVE = 12
RHO_CHUNK = 128


class ConvergenceError(NumericalError):
    pass


class QuadratureDomainError(DomainError):
    pass


# 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21)
_XGK = np.array([
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0,
])
_WGK = np.array([
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525452258, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

KRONROD_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(21)
GAUSS_WEIGHTS[1:10:2] = _WG
GAUSS_WEIGHTS[11:20:2] = _WG[::-1]


def _panel_rules(f, lo: np.ndarray, hi: np.ndarray):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    theta = (mid[:, None] + half[:, None] * KRONROD_NODES).ravel()
    vals = np.asarray(f(theta))
    vals = vals.reshape((lo.size, 21) + vals.shape[1:])
    wk = (half[:, None] * KRONROD_WEIGHTS).reshape((lo.size, 21) + (1,) * (vals.ndim - 2))
    wg = (half[:, None] * GAUSS_WEIGHTS).reshape(wk.shape)
    kron = (vals * wk).sum(1)
    gauss = (vals * wg).sum(1)
    resabs = (np.abs(vals) * wk).sum(1)
    return kron, gauss, resabs


def gk_integrate(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    epsabs: float = EPSABS,
    epsrel: float = EPSREL,
    limit: int = LIMIT,
):
    """Adaptive Gauss-Kronrod quadrature of a vector-valued integrand.

    ``f`` maps a 1-D array of abscissae of length n to an array of shape
    ``(n, ...)``.  Every output component must meet
    ``err <= max(epsabs, epsrel*|I|)``.  Returns ``(integral, error_estimate)``.
    Raises ConvergenceError when more than ``limit`` panels would be needed.
    """
    if b < a:
        raise ValueError("integration limits must be ordered")
    if b == a:
        probe = np.asarray(f(np.array([a])))
        z = np.zeros(probe.shape[1:])
        return z, z.copy()

    lo, hi = np.array([a], float), np.array([b], float)
    kron, gauss, resabs = _panel_rules(f, lo, hi)
    eps = np.finfo(float).eps
    while True:
        diff = np.abs(kron - gauss)
        total = kron.sum(0)
        err = diff.sum(0)
        tol = np.maximum(epsabs, epsrel * np.abs(total))
        if np.all(err <= tol):
            return total, err
        # panels already at round-off level are never split
        live = diff > 200.0 * eps * resabs
        score = np.where(live, diff / tol, 0.0).reshape(lo.size, -1).max(1)
        if not np.any(score > 0):
            return total, err
        if lo.size >= limit:
            raise ConvergenceError(
                f"quadrature budget of {limit} panels exhausted (err={err.max():.3g})"
            )
        order = np.argsort(-score)
        remaining = score.sum() - np.cumsum(score[order])
        nsplit = int(np.searchsorted(-remaining, -0.5) + 1)
        nsplit = max(1, min(nsplit, limit - lo.size, order.size))
        pick = np.zeros(lo.size, bool)
        pick[order[:nsplit]] = True
        plo, phi = lo[pick], hi[pick]
        pmid = 0.5 * (plo + phi)
        new_lo = np.concatenate([plo, pmid])
        new_hi = np.concatenate([pmid, phi])
        k2, g2, r2 = _panel_rules(f, new_lo, new_hi)
        keep = ~pick
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        kron = np.concatenate([kron[keep], k2])
        gauss = np.concatenate([gauss[keep], g2])
        resabs = np.concatenate([resabs[keep], r2])


# ---------------------------------------------------------------------------
# fixed composite Gauss-Legendre panels with cumulative integration


@lru_cache(maxsize=8)
def _gl(n: int):
    x, w = legendre.leggauss(n)
    # S[j, i] = ∫_{-1}^{x_j} ℓ_i(t) dt for the Lagrange basis on the nodes
    vander = legendre.legvander(x, n - 1)
    vint = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        vint[:, i] = legendre.legval(x, legendre.legint(e, lbnd=-1))
    cum = vint @ np.linalg.inv(vander)
    return x, w, cum


@dataclass(frozen=True)
class PanelRule:
    """Composite Gauss-Legendre rule on [0, 2π] (or any breakpoint list).

    ``nodes`` and ``weights`` have shape (P, n).  ``cumulative(values)`` returns
    ∫_{start}^{node} of sampled values at every node.
    """

    nodes: np.ndarray
    weights: np.ndarray
    half: np.ndarray
    cum: np.ndarray

    def integrate(self, values: np.ndarray) -> np.ndarray:
        w = self.weights.reshape(self.weights.shape + (1,) * (values.ndim - 2))
        return (values * w).sum((0, 1))

    def cumulative(self, values: np.ndarray) -> np.ndarray:
        w = self.weights.reshape(self.weights.shape + (1,) * (values.ndim - 2))
        panel_tot = (values * w).sum(1)
        before = np.cumsum(panel_tot, axis=0) - panel_tot
        h = self.half.reshape((-1, 1) + (1,) * (values.ndim - 2))
        inner = np.einsum("ji,pi...->pj...", self.cum, values) * h
        return before[:, None] + inner


def panel_rule(breaks: Sequence[float], max_len: float, n: int = 20) -> PanelRule:
    x, w, cum = _gl(n)
    breaks = np.unique(np.asarray(breaks, dtype=float))
    edges = []
    for a, b in zip(breaks[:-1], breaks[1:]):
        pieces = max(1, int(math.ceil((b - a) / max_len)))
        edges.append(np.linspace(a, b, pieces + 1)[:-1])
    edges = np.concatenate(edges + [breaks[-1:]])
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    nodes = 0.5 * (hi + lo)[:, None] + half[:, None] * x
    return PanelRule(nodes, half[:, None] * w, half, cum)


def graded_edges(breaks: Sequence[float], singular: float, delta: float,
                 ratio: float = 0.5, hmax: float = 0.5) -> np.ndarray:
    """Panel edges refined geometrically toward a near-singular abscissa.

    The integrand is assumed analytic except at ``singular ± i·delta``; every
    panel is no longer than ``ratio`` times its distance to that point.
    """
    breaks = np.unique(np.asarray(breaks, dtype=float))
    out = [breaks[0]]
    for a, b in zip(breaks[:-1], breaks[1:]):
        near_a = abs(a - singular) <= abs(b - singular)
        start, stop = (a, b) if near_a else (b, a)
        pts = [start]
        x = start
        while abs(stop - x) > 1e-15:
            h = min(hmax, ratio * math.hypot(delta, x - singular))
            x = x + h if stop > start else x - h
            if (stop - x) * math.copysign(1.0, stop - start) <= 0.25 * h:
                x = stop
            pts.append(x)
        if not near_a:
            pts = pts[::-1]
        out.extend(pts[1:])
    return np.array(out)


def graded_rule(breaks: Sequence[float], singular: float, delta: float, n: int = 24,
                ratio: float = 0.5) -> PanelRule:
    x, w, cum = _gl(n)
    edges = graded_edges(breaks, singular, delta, ratio)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    nodes = 0.5 * (hi + lo)[:, None] + half[:, None] * x
    return PanelRule(nodes, half[:, None] * w, half, cum)


def singularity_distance(rho: np.ndarray) -> float:
    """Smallest imaginary distance of a zero of 1 + ρ - cos θ over the batch."""
    rho = np.asarray(rho, dtype=float)
    arg = np.where(rho > 0, 1.0 + rho, -1.0 - rho)
    return float(np.min(np.arccosh(arg)))


# ---------------------------------------------------------------------------
# basis terms


class Kind(str, enum.Enum):
    C = "C"
    S = "S"
    D = "D"
    POW_RHO = "rho^b"
    POW_RHO2 = "(rho+2)^b"
    CONST = "1"


KERNEL_KINDS = (Kind.C, Kind.S, Kind.D)


def _fmt_angle(x: float) -> str:
    r = x / math.pi
    for den in (1, 2, 3, 4, 6, 8, 12):
        num = r * den
        if abs(num - round(num)) < 1e-12:
            num = int(round(num))
            if num == 0:
                return "0"
            s = "pi" if num == 1 else f"{num}pi"
            return s if den == 1 else f"{s}/{den}"
    return f"{x:.6g}"


@dataclass(frozen=True)
class BasisTerm:
    kind: Kind
    k: int = 0
    E: tuple = (0.0, math.pi)
    beta: float = -0.5

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "E", (float(self.E[0]), float(self.E[1])))
        object.__setattr__(self, "beta", float(self.beta))
        if self.kind in (Kind.S, Kind.D) and self.k < 1:
            raise DomainError(f"{self.kind.value}-kernels need k >= 1")
        if self.k < 0:
            raise DomainError("harmonic index must be non-negative")
        lo, hi = self.E
        if not (0.0 <= lo <= hi <= TWO_PI + 1e-12):
            raise DomainError(f"E={self.E} is not a subinterval of [0, 2pi]")
        if self.kind is not Kind.CONST and self.beta >= 0 and self.beta == int(self.beta):
            raise DomainError(f"beta={self.beta} is a non-negative integer")

    @property
    def is_kernel(self) -> bool:
        return self.kind in KERNEL_KINDS

    def label(self) -> str:
        if self.kind is Kind.CONST:
            return "1"
        if self.kind is Kind.POW_RHO:
            return "rho^beta"
        if self.kind is Kind.POW_RHO2:
            return "(rho+2)^beta"
        return f"{self.kind.value}{self.k}[{_fmt_angle(self.E[0])},{_fmt_angle(self.E[1])}]"

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "k": self.k, "E": list(self.E), "beta": self.beta}

    @classmethod
    def from_json(cls, data: dict) -> "BasisTerm":
        return cls(Kind(data["kind"]), int(data["k"]), tuple(data["E"]), float(data["beta"]))


def C(k, E, beta) -> BasisTerm:
    return BasisTerm(Kind.C, k, E, beta)


def S(k, E, beta) -> BasisTerm:
    return BasisTerm(Kind.S, k, E, beta)


def D(k, E, beta) -> BasisTerm:
    return BasisTerm(Kind.D, k, E, beta)


CONST = BasisTerm(Kind.CONST)


def falling(beta: float, n: int) -> float:
    out = 1.0
    for j in range(n):
        out *= beta - j
    return out


def base_range(rho: float, E) -> tuple[float, float]:
    """Min and max of 1 + ρ - cos θ over θ ∈ E."""
    lo, hi = E
    cos_lo, cos_hi = math.cos(lo), math.cos(hi)
    cmax = max(cos_lo, cos_hi)
    cmin = -1.0 if lo <= math.pi <= hi else min(cos_lo, cos_hi)
    if lo <= 0.0 or hi >= TWO_PI:
        cmax = 1.0
    return 1.0 + rho - cmax, 1.0 + rho - cmin


def check_rho(rho: np.ndarray, E) -> np.ndarray:
    """Return the constant sign of the base on E for every ρ, or raise."""
    signs = np.empty(rho.shape, dtype=float)
    for i, r in enumerate(rho):
        bmin, bmax = base_range(float(r), E)
        if bmin > 0:
            signs[i] = 1.0
            margin = bmin
        elif bmax < 0:
            signs[i] = -1.0
            margin = -bmax
        else:
            raise QuadratureDomainError(
                f"1 + rho - cos(theta) changes sign on E={E} for rho={r!r}"
            )
        if margin < NEAR_BOUNDARY:
            warnings.warn(f"rho={r!r} is within {margin:.1e} of the annulus boundary", stacklevel=3)
    return signs


def _trig_factors(terms: Sequence[BasisTerm], theta: np.ndarray) -> np.ndarray:
    cols = []
    for t in terms:
        if t.kind is Kind.C:
            cols.append(np.cos(t.k * theta))
        elif t.kind is Kind.S:
            cols.append(np.sin(t.k * theta))
        else:
            cols.append(theta * np.sin(t.k * theta))
    return np.stack(cols, axis=1)


def _kernel_block(terms, E, beta, rho, order, epsabs, epsrel, limit):
    out = np.zeros((rho.size, len(terms)))
    if E[1] <= E[0]:
        return out
    signs = check_rho(rho, E)
    power = beta - order
    coef = falling(beta, order)
    for start in range(0, rho.size, RHO_CHUNK):
        r = rho[start:start + RHO_CHUNK]

        def integrand(theta, r=r):
            base = np.abs(1.0 + r[None, :] - np.cos(theta)[:, None]) ** power
            return base[:, :, None] * _trig_factors(terms, theta)[:, None, :]

        val, _ = gk_integrate(integrand, E[0], E[1], epsabs, epsrel, limit)
        out[start:start + RHO_CHUNK] = val
    return out * (coef * signs ** order)[:, None]


def _power_column(term: BasisTerm, rho: np.ndarray, order: int) -> np.ndarray:
    x = rho if term.kind is Kind.POW_RHO else rho + 2.0
    if np.any(x == 0):
        raise QuadratureDomainError(f"{term.label()} is singular at the requested rho")
    return falling(term.beta, order) * np.sign(x) ** order * np.abs(x) ** (term.beta - order)


def basis_matrix(
    terms: Sequence[BasisTerm],
    rho,
    order: int = 0,
    epsabs: float = EPSABS,
    epsrel: float = EPSREL,
    limit: int = LIMIT,
) -> np.ndarray:
    """Values (or ``order``-th ρ-derivatives) of every term at every ρ.

    Returns an array of shape (len(rho), len(terms)).
    """
    if not 0 <= order <= MAX_DERIVATIVE:
        raise DomainError(f"derivative order must lie in [0, {MAX_DERIVATIVE}]")
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    out = np.zeros((rho.size, len(terms)))
    groups: dict = {}
    for j, t in enumerate(terms):
        if t.is_kernel:
            groups.setdefault((t.E, t.beta), []).append(j)
        elif t.kind is Kind.CONST:
            out[:, j] = 1.0 if order == 0 else 0.0
        else:
            out[:, j] = _power_column(t, rho, order)
    for (E, beta), idx in groups.items():
        out[:, idx] = _kernel_block([terms[j] for j in idx], E, beta, rho, order, epsabs, epsrel, limit)
    return out


def eval_basis(term: BasisTerm, rho: float, **kw) -> float:
    return float(basis_matrix([term], [rho], **kw)[0, 0])


def eval_basis_drho(term: BasisTerm, rho: float, order: int, **kw) -> float:
    """order-th ρ-derivative from ∂ρ K(ρ, β) = ±β K(ρ, β - 1) (sign of the base)."""
    if not 0 <= order <= MAX_PUBLIC_DERIVATIVE:
        raise DomainError(f"derivative order must lie in [0, {MAX_PUBLIC_DERIVATIVE}]")
    return float(basis_matrix([term], [rho], order=order, **kw)[0, 0])


# ---------------------------------------------------------------------------
# linear combinations


@dataclass(frozen=True)
class LinearCombination:
    terms: tuple
    domain: tuple = (0.0, math.inf)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((float(c), t) for c, t in self.terms))

    @classmethod
    def from_arrays(cls, coefs: Iterable[float], basis: Iterable[BasisTerm], domain=(0.0, math.inf)):
        return cls(tuple(zip(coefs, basis)), domain)

    @property
    def coefs(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms])

    @property
    def basis(self) -> list:
        return [t for _, t in self.terms]

    def __len__(self):
        return len(self.terms)

    def pruned(self, tol: float = 1e-12) -> "LinearCombination":
        return LinearCombination(tuple((c, t) for c, t in self.terms if abs(c) > tol), self.domain)

    def __call__(self, rho, order: int = 0, **kw) -> np.ndarray:
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        if not self.terms:
            return np.zeros(rho.shape)
        return basis_matrix(self.basis, rho, order=order, **kw) @ self.coefs

    def labels(self) -> list[str]:
        return [t.label() for t in self.basis]

    def to_json(self) -> dict:
        return {
            "domain": [_json_float(x) for x in self.domain],
            "terms": [{"coef": c, **t.to_json()} for c, t in self.terms],
        }

    @classmethod
    def from_json(cls, data: dict) -> "LinearCombination":
        terms = tuple((float(d["coef"]), BasisTerm.from_json(d)) for d in data["terms"])
        return cls(terms, tuple(float(x) for x in data["domain"]))


def _json_float(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


# ---------------------------------------------------------------------------
# interval identities


def verify_interval_identities(
    k: int, theta1: float, beta: float, rho: float, epsabs: float = 1e-14, epsrel: float = 1e-14
) -> dict[str, float]:
    """Absolute residuals of the reflection identities relating kernels on
    [0, θ1], [θ1, 2π] and the folded intervals inside [0, π].

    Identities involving S or D are skipped for k = 0.
    """
    pi = math.pi
    kw = dict(epsabs=epsabs, epsrel=epsrel)

    def K(kind, E):
        if kind is not Kind.C and k == 0:
            return 0.0
        return eval_basis(BasisTerm(kind, k, E, beta), rho, **kw)

    res = {}
    if 0 < theta1 <= pi:
        a, b, c = (0.0, theta1), (theta1, TWO_PI), (theta1, pi)
        if k >= 1:
            res["S[t1,2pi] + S[0,t1]"] = abs(K(Kind.S, b) + K(Kind.S, a))
        res["C[t1,2pi] - C[0,t1] - 2C[t1,pi]"] = abs(K(Kind.C, b) - K(Kind.C, a) - 2 * K(Kind.C, c))
        if k >= 1:
            res["D[t1,2pi] - D[0,t1] - 2D[t1,pi] + 2pi(S[0,t1] + S[t1,pi])"] = abs(
                K(Kind.D, b) - K(Kind.D, a) - 2 * K(Kind.D, c) + 2 * pi * (K(Kind.S, a) + K(Kind.S, c))
            )
    elif pi < theta1 <= TWO_PI + 1e-12:
        theta1 = min(theta1, TWO_PI)
        phi = TWO_PI - theta1
        a, b, f, g = (0.0, theta1), (theta1, TWO_PI), (0.0, phi), (phi, pi)
        if k >= 1:
            res["S[0,t1] - S[0,2pi-t1]"] = abs(K(Kind.S, a) - K(Kind.S, f))
            res["S[0,t1] + S[t1,2pi]"] = abs(K(Kind.S, a) + K(Kind.S, b))
        res["C[0,t1] - C[0,2pi-t1] - 2C[2pi-t1,pi]"] = abs(K(Kind.C, a) - K(Kind.C, f) - 2 * K(Kind.C, g))
        res["C[t1,2pi] - C[0,2pi-t1]"] = abs(K(Kind.C, b) - K(Kind.C, f))
        if k >= 1:
            res["D[t1,2pi] - D[0,2pi-t1] + 2pi S[0,2pi-t1]"] = abs(
                K(Kind.D, b) - K(Kind.D, f) + 2 * pi * K(Kind.S, f)
            )
            res["D[0,t1] - D[0,2pi-t1] - 2D[2pi-t1,pi] + 2pi S[2pi-t1,pi]"] = abs(
                K(Kind.D, a) - K(Kind.D, f) - 2 * K(Kind.D, g) + 2 * pi * K(Kind.S, g)
            )
    else:
        raise DomainError(f"theta1={theta1!r} outside (0, 2pi]")
    return res


# ---------------------------------------------------------------------------
# extended precision evaluation on a fixed window

MP_DPS = int(os.environ.get("ABELCYCLES_MP_DPS", "50"))
_MP_GL: dict = {}


def mp_gauss_legendre(degree: int):
    """mpmath Gauss-Legendre nodes/weights on [-1, 1]; degree d gives 3*2^(d-1) points."""
    key = (degree, mpmath.mp.prec)
    if key not in _MP_GL:
        from mpmath.calculus.quadrature import GaussLegendre

        _MP_GL[key] = GaussLegendre(mpmath.mp).calc_nodes(degree, mpmath.mp.prec)
    return _MP_GL[key]


class ExtendedBasis:
    """Values of a fixed term list in mpmath, for ρ inside a fixed window.

    One graded Gauss-Legendre mesh (built for the window's closest approach
    to the singular point) serves every ρ, so trig factors are tabulated once
    and each evaluation costs one power per node.
    """

    def __init__(self, terms: Sequence[BasisTerm], window: Sequence[float], dps: int = MP_DPS,
                 degree: int = 4):
        self.terms = list(terms)
        lo, hi = float(window[0]), float(window[1])
        if not (lo > 0 or hi < -2) or not hi > lo:
            raise QuadratureDomainError(f"window {window} must lie on one branch")
        self.window = (lo, hi)
        self.dps = dps
        self.sign = 1 if lo > 0 else -1
        kern = [t for t in self.terms if t.is_kernel]
        breaks = {0.0, math.pi}
        for t in kern:
            breaks.update(t.E)
        singular = 0.0 if lo > 0 else math.pi
        delta = singularity_distance(np.array([lo, hi]))
        edges = graded_edges(sorted(b for b in breaks if b <= TWO_PI), singular, delta)
        self.groups: dict = {}
        for j, t in enumerate(self.terms):
            if t.is_kernel:
                self.groups.setdefault(t.beta, []).append(j)
        with mpmath.workdps(dps):
            gl = mp_gauss_legendre(degree)
            th, w = [], []
            for a, b in zip(edges[:-1], edges[1:]):
                if not any(t.E[0] <= a and b <= t.E[1] for t in kern):
                    continue
                mid = (mpmath.mpf(a) + mpmath.mpf(b)) / 2
                half = (mpmath.mpf(b) - mpmath.mpf(a)) / 2
                for x, wx in gl:
                    th.append(mid + half * x)
                    w.append(half * wx)
            self.theta = th
            self.cos = [mpmath.cos(t) for t in th]
            self.F = {}
            for beta, idx in self.groups.items():
                cols = []
                for j in idx:
                    t = self.terms[j]
                    col = []
                    for x, wx in zip(th, w):
                        if not (t.E[0] <= x <= t.E[1]):
                            col.append(mpmath.mpf(0))
                        elif t.kind is Kind.C:
                            col.append(wx * mpmath.cos(t.k * x))
                        elif t.kind is Kind.S:
                            col.append(wx * mpmath.sin(t.k * x))
                        else:
                            col.append(wx * x * mpmath.sin(t.k * x))
                    cols.append(col)
                self.F[beta] = cols

    def _check(self, rho: float):
        if not self.window[0] - 1e-12 <= rho <= self.window[1] + 1e-12:
            raise QuadratureDomainError(f"rho={rho} outside the tabulated window {self.window}")

    def _weights(self, rho, beta):
        r1 = 1 + mpmath.mpf(rho)
        two_beta = 2 * beta
        if two_beta == int(two_beta):
            # half-integer exponents: sqrt and an integer power are much cheaper
            return [mpmath.sqrt(abs(r1 - c)) ** int(two_beta) for c in self.cos]
        b = mpmath.mpf(beta)
        return [abs(r1 - c) ** b for c in self.cos]

    def row(self, rho: float) -> list:
        """mp values of every term at ``rho``."""
        self._check(rho)
        with mpmath.workdps(self.dps):
            out = [mpmath.mpf(0)] * len(self.terms)
            for beta, idx in self.groups.items():
                g = self._weights(rho, beta)
                for j, col in zip(idx, self.F[beta]):
                    out[j] = mpmath.fdot(g, col)
            r = mpmath.mpf(rho)
            for j, t in enumerate(self.terms):
                if t.kind is Kind.CONST:
                    out[j] = mpmath.mpf(1)
                elif t.kind is Kind.POW_RHO:
                    out[j] = abs(r) ** mpmath.mpf(t.beta)
                elif t.kind is Kind.POW_RHO2:
                    out[j] = abs(r + 2) ** mpmath.mpf(t.beta)
            return out

    def matrix(self, rhos) -> "mpmath.matrix":
        with mpmath.workdps(self.dps):
            return mpmath.matrix([self.row(float(r)) for r in rhos])

    def combination(self, coefs) -> "ExtendedCombination":
        return ExtendedCombination(self, coefs)


class ExtendedCombination:
    """Σ c_j f_j evaluated in mpmath, returned as float arrays."""

    def __init__(self, basis: ExtendedBasis, coefs):
        self.basis = basis
        with mpmath.workdps(basis.dps):
            self.coefs = [mpmath.mpf(c) for c in coefs]
            # fold the coefficients into one weighted trig column per exponent
            self.T = {}
            for beta, idx in basis.groups.items():
                cols = basis.F[beta]
                self.T[beta] = [mpmath.fsum(self.coefs[j] * cols[n][i] for n, j in enumerate(idx))
                                for i in range(len(basis.theta))]

    def mp_value(self, rho: float):
        b = self.basis
        b._check(rho)
        with mpmath.workdps(b.dps):
            total = mpmath.mpf(0)
            for beta, T in self.T.items():
                total += mpmath.fdot(b._weights(rho, beta), T)
            r = mpmath.mpf(rho)
            for c, t in zip(self.coefs, b.terms):
                if t.kind is Kind.CONST:
                    total += c
                elif t.kind is Kind.POW_RHO:
                    total += c * abs(r) ** mpmath.mpf(t.beta)
                elif t.kind is Kind.POW_RHO2:
                    total += c * abs(r + 2) ** mpmath.mpf(t.beta)
            return total

    def __call__(self, rho) -> np.ndarray:
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        return np.array([float(self.mp_value(float(r))) for r in rho.ravel()]).reshape(rho.shape)
