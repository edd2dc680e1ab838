"""Wronskians, ECT checks by sampling, and zero counting by sign alternation.

Two kinds of families are supported:

* trigonometric families in θ on (0, π) (members 1, θ, cos kθ, sin kθ,
  θ cos kθ, θ sin kθ).  Derivatives are closed form and Wronskians are taken
  in mpmath at a precision chosen from the family size and the distance of the
  grid to the interval ends.

* kernel families in ρ (members C_k^E, S_k^E, D_k^E sharing one β, plus the
  power terms |ρ|^β, |ρ+2|^β and an optional leading constant).  The j-th
  ρ-derivative of every member is an integral of the member's trig factor
  against |g|^(β-j), g = 1 + ρ - cos θ, so the derivative matrix is a moment
  matrix.  Rows are recombined exactly into Chebyshev polynomials of 1/|g| and
  columns are orthogonalised by QR, both triangular operations whose effect on
  leading minors is known.  What remains is a well-scaled matrix whose leading
  minors are computed in double precision with a resolution check (its
  smallest singular value).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import gmpy2
import mpmath
import numpy as np
from numpy.polynomial import chebyshev as npcheb

from .domain import DomainError, NumericalError
from .quadrature import (
    CONST,
    BasisTerm,
    Kind,
    C,
    D,
    S,
    basis_matrix,
    falling,
    graded_edges,
    graded_rule,
    mp_gauss_legendre,
    singularity_distance,
)

RESOLUTION = 1e-13  # smallest admissible singular value of the conditioned block
MP_DPS = 50
ZERO_TOL = 1e-12
BISECT_WIDTH = 1e-10
FLAT_DERIV = 1e-8


# ---------------------------------------------------------------------------
# families


@dataclass(frozen=True)
class TrigMember:
    kind: str  # one of 1, theta, c, s, tc, ts
    k: int = 0

    def __post_init__(self):
        if self.kind not in ("1", "theta", "c", "s", "tc", "ts"):
            raise DomainError(f"unknown trigonometric member {self.kind!r}")

    def label(self) -> str:
        if self.kind in ("1", "theta"):
            return self.kind
        return {"c": "c", "s": "s", "tc": "theta*c", "ts": "theta*s"}[self.kind] + str(self.k)

    def derivative(self, t: np.ndarray, n: int) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "1":
            return np.ones_like(t) if n == 0 else np.zeros_like(t)
        if self.kind == "theta":
            return t.copy() if n == 0 else (np.ones_like(t) if n == 1 else np.zeros_like(t))
        base = "c" if self.kind in ("c", "tc") else "s"

        def plain(j):
            if j < 0:
                return np.zeros_like(t)
            shift = j * math.pi / 2
            fn = np.cos if base == "c" else np.sin
            return float(self.k) ** j * fn(self.k * t + shift)

        if self.kind in ("c", "s"):
            return plain(n)
        return t * plain(n) + n * plain(n - 1)

    def mp_derivative(self, t, n: int):
        if self.kind == "1":
            return mpmath.mpf(1) if n == 0 else mpmath.mpf(0)
        if self.kind == "theta":
            return t if n == 0 else (mpmath.mpf(1) if n == 1 else mpmath.mpf(0))
        base = "c" if self.kind in ("c", "tc") else "s"
        fn = mpmath.cos if base == "c" else mpmath.sin

        def plain(j):
            if j < 0:
                return mpmath.mpf(0)
            return mpmath.mpf(self.k) ** j * fn(self.k * t + j * mpmath.pi / 2)

        if self.kind in ("c", "s"):
            return plain(n)
        return t * plain(n) + n * plain(n - 1)


class FunctionFamily:
    """Ordered list of functions sharing an open interval."""

    members: tuple
    interval: tuple

    @property
    def size(self) -> int:
        return len(self.members)

    def labels(self) -> list[str]:
        return [m.label() for m in self.members]

    def values(self, t) -> np.ndarray:
        return self.derivatives(t, 0)

    def derivatives(self, t, order: int) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def default_grid(self, n: int = 400) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def wronskian_samples(self, t) -> "MinorSamples":  # pragma: no cover - abstract
        raise NotImplementedError

    def discrete_samples(self, tuples: Sequence[np.ndarray]) -> list:  # pragma: no cover
        raise NotImplementedError


@dataclass(frozen=True)
class TrigFamily(FunctionFamily):
    members: tuple
    interval: tuple = (0.0, math.pi)

    def derivatives(self, t, order: int) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.stack([m.derivative(t, order) for m in self.members], axis=1)

    def default_grid(self, n: int = 400) -> np.ndarray:
        lo, hi = self.interval
        return lo + (hi - lo) * (np.arange(n) + 0.5) / n

    def _dps(self, t: np.ndarray) -> int:
        lo, hi = self.interval
        gap = max(float(np.min(np.minimum(t - lo, hi - t))), 1e-300)
        n = self.size
        return 30 + int(math.ceil(n * (n - 1) / 2 * max(1.0, -math.log10(gap)) + 2 * n))

    def wronskian_samples(self, t) -> "MinorSamples":
        t = np.atleast_1d(np.asarray(t, dtype=float))
        n = self.size
        out = MinorSamples.empty(t.size, n)
        with mpmath.workdps(self._dps(t)):
            for i, ti in enumerate(t):
                tm = mpmath.mpf(float(ti))
                A = [[m.mp_derivative(tm, r) for m in self.members] for r in range(n)]
                _mp_leading_minors(A, out, i)
        return out

    def discrete_samples(self, tuples) -> list:
        res = []
        for tup in tuples:
            tup = np.sort(np.asarray(tup, dtype=float))
            k = tup.size
            with mpmath.workdps(self._dps(tup)):
                A = [[m.mp_derivative(mpmath.mpf(float(x)), 0) for m in self.members[:k]] for x in tup]
                det = mpmath.det(mpmath.matrix(A))
                res.append((int(mpmath.sign(det)), _mp_log10(det), True))
        return res


def _mp_log10(x) -> float:
    return float(mpmath.log10(abs(x))) if x != 0 else -math.inf


def _mp_leading_minors(A, out: "MinorSamples", i: int):
    """Gaussian elimination without pivoting; leading minors are pivot products."""
    n = len(A)
    A = [row[:] for row in A]
    sign, logabs = 1, 0.0
    eps = mpmath.mpf(10) ** (-(mpmath.mp.dps - 15))
    for k in range(n):
        piv = A[k][k]
        scale = max(abs(A[r][k]) for r in range(k, n)) or mpmath.mpf(1)
        if abs(piv) <= eps * scale:
            out.sign[i, k:] = 0
            out.log10[i, k:] = -math.inf
            out.smin[i, k:] = 0.0
            return
        sign *= 1 if piv > 0 else -1
        logabs += float(mpmath.log10(abs(piv)))
        out.sign[i, k] = sign
        out.log10[i, k] = logabs
        out.smin[i, k] = 1.0
        for r in range(k + 1, n):
            fct = A[r][k] / piv
            if fct:
                for c in range(k, n):
                    A[r][c] -= fct * A[k][c]


@dataclass
class MinorSamples:
    """sign, log10|W| and resolution of every leading minor at every sample."""

    sign: np.ndarray
    log10: np.ndarray
    smin: np.ndarray

    @classmethod
    def empty(cls, npts: int, n: int) -> "MinorSamples":
        return cls(np.zeros((npts, n), int), np.full((npts, n), -np.inf), np.zeros((npts, n)))


def trig_family(spec: Sequence) -> TrigFamily:
    """Build from e.g. [("1",), ("c", 1), ("ts", 2)]."""
    return TrigFamily(tuple(TrigMember(*item) for item in spec))


# ---------------------------------------------------------------------------
# kernel families


@dataclass(frozen=True)
class KernelFamily(FunctionFamily):
    members: tuple
    interval: tuple = (0.0, math.inf)
    extended: bool = True  # retry unresolved samples in mpmath
    beta: float = field(init=False)

    def __post_init__(self):
        lo, hi = self.interval
        if not (lo >= 0 or hi <= -2):
            raise DomainError(f"kernel family interval {self.interval} crosses [-2, 0]")
        betas = {t.beta for t in self.members if t.kind is not Kind.CONST}
        if len(betas) > 1:
            raise DomainError("kernel family members must share one exponent")
        if any(t.kind is Kind.CONST for t in self.members[1:]):
            raise DomainError("a constant member is only supported in first position")
        object.__setattr__(self, "beta", betas.pop() if betas else math.nan)

    @property
    def positive(self) -> bool:
        return self.interval[0] >= 0

    def derivatives(self, rho, order: int, **kw) -> np.ndarray:
        return basis_matrix(list(self.members), rho, order=order, **kw)

    def default_grid(self, n: int = 400, span=(1e-2, 1e2)) -> np.ndarray:
        d = np.geomspace(span[0], span[1], n)
        lo, hi = self.interval
        if self.positive:
            g = lo + d
            return g[g < hi]
        g = (hi - d)[::-1]
        return g[g > lo]

    def wronskian_samples(self, rho) -> MinorSamples:
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        n = self.size
        out = MinorSamples.empty(rho.size, n)
        lead_const = self.members[0].kind is Kind.CONST
        rest = list(self.members[1:] if lead_const else self.members)
        beta = self.beta - 1.0 if lead_const else self.beta
        if not rest:
            out.sign[:], out.log10[:], out.smin[:] = 1, 0.0, 1.0
            return out
        k = len(rest)
        sg = np.zeros((rho.size, k), int)
        lg = np.zeros((rho.size, k))
        sm = np.zeros((rho.size, k))
        for i, r in enumerate(rho):
            sg[i], lg[i], sm[i] = _kernel_minors(rest, beta, float(r))
        bad = np.flatnonzero(np.any(sm == 0, axis=1))
        if self.extended and bad.size:
            for i, (a, b, c) in zip(bad, _kernel_minors_ext(rest, beta, rho[bad])):
                sg[i], lg[i], sm[i] = a, b, c
        if lead_const:
            # W(1, f1..fk) = W(f1', ..., fk') and f' = β s (same family at β - 1)
            s = np.where(rho > 0, 1.0, -1.0)[:, None]
            ks = np.arange(1, n)[None, :]
            fac_sign = np.sign(self.beta * s) ** ks
            out.sign[:, 0], out.log10[:, 0], out.smin[:, 0] = 1, 0.0, 1.0
            out.sign[:, 1:] = sg * fac_sign.astype(int)
            out.log10[:, 1:] = lg + ks * math.log10(abs(self.beta))
            out.smin[:, 1:] = sm
        else:
            out.sign[:], out.log10[:], out.smin[:] = sg, lg, sm
        return out

    def discrete_samples(self, tuples) -> list:
        res = []
        for tup in tuples:
            tup = np.sort(np.asarray(tup, dtype=float))
            res.append(_kernel_discrete(list(self.members[: tup.size]), self.beta, tup))
        return res


def _breaks(members: Sequence[BasisTerm]) -> list:
    kern = [t for t in members if t.is_kernel]
    if not kern:
        return [0.0, math.pi]
    lo = min(t.E[0] for t in kern)
    hi = max(t.E[1] for t in kern)
    ends = {lo, hi, 0.0, math.pi}
    for t in kern:
        ends.update(t.E)
    return sorted(e for e in ends if lo <= e <= hi)


def _singular_point(rho: float) -> float:
    # 1 + ρ - cos θ comes closest to zero at θ = 0 (ρ > 0) or θ = π (ρ < -2)
    return 0.0 if rho > 0 else math.pi


def _trig_columns(members: Sequence[BasisTerm], th: np.ndarray) -> np.ndarray:
    F = np.zeros((th.size, len(members)))
    for j, t in enumerate(members):
        if not t.is_kernel:
            continue
        inside = (th > t.E[0]) & (th < t.E[1])
        if t.kind is Kind.C:
            F[inside, j] = np.cos(t.k * th[inside])
        elif t.kind is Kind.S:
            F[inside, j] = np.sin(t.k * th[inside])
        else:
            F[inside, j] = th[inside] * np.sin(t.k * th[inside])
    return F


def _atoms(members: Sequence[BasisTerm]) -> list:
    """(θ, column) pairs for point-mass members |ρ|^β (θ=0) and |ρ+2|^β (θ=π)."""
    out = []
    for j, t in enumerate(members):
        if t.kind is Kind.POW_RHO:
            out.append((0.0, j))
        elif t.kind is Kind.POW_RHO2:
            out.append((math.pi, j))
        elif t.kind is Kind.CONST:
            raise DomainError("constant members must lead the family")
    return out


def _nodes_for(members: Sequence[BasisTerm], rho: np.ndarray, n: int = 24):
    rho = np.atleast_1d(rho)
    rule = graded_rule(_breaks(members), _singular_point(float(rho[0])), singularity_distance(rho), n)
    th = rule.nodes.ravel()
    w = rule.weights.ravel()
    F = _trig_columns(members, th)
    atoms = _atoms(members)
    if atoms:
        extra = np.zeros((len(atoms), len(members)))
        for r, (_, j) in enumerate(atoms):
            extra[r, j] = 1.0
        th = np.concatenate([th, [a for a, _ in atoms]])
        w = np.concatenate([w, np.ones(len(atoms))])
        F = np.vstack([F, extra])
    return th, w, F


def _leading_from_block(G: np.ndarray, base_sign: np.ndarray, base_log: np.ndarray):
    n = G.shape[1]
    sg = np.zeros(n, int)
    lg = np.full(n, -np.inf)
    sm = np.zeros(n)
    for k in range(1, n + 1):
        blk = G[:k, :k]
        sm[k - 1] = np.linalg.svd(blk, compute_uv=False).min()
        sgn, ld = np.linalg.slogdet(blk)
        if sgn == 0:
            continue
        sg[k - 1] = int(sgn) * int(base_sign[k - 1])
        lg[k - 1] = ld / math.log(10) + base_log[k - 1]
    return sg, lg, sm


def _row_map(v_lo: float, v_hi: float, n: int):
    """Affine map v -> x onto [-1, 1] and log10 of the v-leading coefficient of T_j(x(v))."""
    a = 2.0 / (v_hi - v_lo)
    b = -(v_lo + v_hi) / (v_hi - v_lo)
    j = np.arange(n)
    lead_log = np.where(j == 0, 0.0, (j - 1) * math.log10(2.0) + j * math.log10(a))
    return a, b, lead_log


def _conditioned_block(members, beta, rho, n_nodes):
    n = len(members)
    th, w, F = _nodes_for(members, np.array([rho]), n_nodes)
    g = np.abs(1.0 + rho - np.cos(th))
    v = 1.0 / g
    lo_g, hi_g = abs(rho), abs(rho + 2.0)
    a, b, lead_log = _row_map(1.0 / max(lo_g, hi_g), 1.0 / min(lo_g, hi_g), n)
    sw = np.sqrt(w * g**beta)
    X = sw[:, None] * npcheb.chebvander(a * v + b, n - 1)
    Y = sw[:, None] * F
    Qx, Rx = np.linalg.qr(X)
    Qy, Ry = np.linalg.qr(Y)
    return Qx.T @ Qy, np.diag(Rx), np.diag(Ry), lead_log


def _prefactor(beta: float, rho: float, n: int):
    s = 1.0 if rho > 0 else -1.0
    fall = np.array([falling(beta, i) * s**i for i in range(n)])
    return np.sign(fall), np.log10(np.abs(fall))


def _kernel_minors(members: Sequence[BasisTerm], beta: float, rho: float):
    """Leading minors of the ρ-derivative matrix of ``members`` at ``rho``,
    every member integrated against |g|^beta.

    Returns (sign, log10|W|, resolution) per size.  Resolution is the smallest
    singular value of the conditioned block, set to 0 when it does not clear
    the discretisation/round-off error estimated from two rule orders.
    """
    n = len(members)
    G, dx, dy, lead_log = _conditioned_block(members, beta, rho, 24)
    G2, dx2, dy2, _ = _conditioned_block(members, beta, rho, 32)
    # QR sign conventions can differ between the two rules; align before comparing
    sx = np.sign(dx) * np.sign(dx2)
    sy = np.sign(dy) * np.sign(dy2)
    err = float(np.max(np.abs(G - sx[:, None] * G2 * sy[None, :])))
    fsign, flog = _prefactor(beta, rho, n)
    per_sign = np.sign(dx) * np.sign(dy) * fsign
    per_log = np.log10(np.abs(dx)) + np.log10(np.abs(dy)) + flog - lead_log
    sg, lg, sm = _leading_from_block(G, np.cumprod(per_sign).astype(int), np.cumsum(per_log))
    floor = max(RESOLUTION, 100.0 * err)
    sm = np.where(sm > floor, sm, 0.0)
    return sg, lg, sm


# extended precision ----------------------------------------------------------
#
# Same moment matrix as above, assembled in gmpy2 binary floating point on a
# mesh fixed per batch.  With 24-point panels graded at ratio 1/2 the
# quadrature error sits far below the level's trusted floor.

# (bits, Gauss-Legendre degree, smallest trusted equilibrated minor); the
# second level only runs on samples the first could not resolve
EXT_LEVELS = ((192, 4, 1e-30), (448, 5, 1e-70))


def _to_mpfr(x, bits: int) -> "gmpy2.mpfr":
    # exact transfer of an mpmath number (.man drops the sign)
    sign, man, exp, _ = x._mpf_
    if not man:
        return gmpy2.mpfr(0)
    v = gmpy2.mul_2exp(gmpy2.mpfr(man, max(bits, int(man.bit_length()))), exp)
    return -v if sign else v


def _ectx(bits: int):
    return gmpy2.context(gmpy2.get_context(), precision=bits)


class _ExtendedKernels:
    """Tabulated trig columns of ``members`` on one graded mesh."""

    def __init__(self, members: Sequence[BasisTerm], delta: float, singular: float, level: int = 0):
        self.members = list(members)
        self.bits, degree, self.floor = EXT_LEVELS[level]
        n = len(self.members)
        kern = [t for t in self.members if t.is_kernel]
        edges = graded_edges(_breaks(self.members), singular, delta) if kern else np.zeros(1)
        with mpmath.workdps(int(self.bits * 0.30103) + 10):
            raw = mp_gauss_legendre(degree)
        with _ectx(self.bits):
            gl = [(_to_mpfr(x, self.bits), _to_mpfr(w, self.bits)) for x, w in raw]
            th, w, cols = [], [], []
            for lo, hi in zip(edges[:-1], edges[1:]):
                active = [(j, t) for j, t in enumerate(self.members) if t.is_kernel and t.E[0] <= lo and hi <= t.E[1]]
                if not active:
                    continue
                mid = (gmpy2.mpfr(lo) + gmpy2.mpfr(hi)) / 2
                half = (gmpy2.mpfr(hi) - gmpy2.mpfr(lo)) / 2
                for x, wx in gl:
                    t_ = mid + half * x
                    row = [gmpy2.mpfr(0)] * n
                    for j, t in active:
                        if t.kind is Kind.C:
                            row[j] = gmpy2.cos(t.k * t_)
                        elif t.kind is Kind.S:
                            row[j] = gmpy2.sin(t.k * t_)
                        else:
                            row[j] = t_ * gmpy2.sin(t.k * t_)
                    th.append(t_)
                    w.append(half * wx)
                    cols.append(row)
            # power terms: point masses where 1 + ρ - cos θ equals |ρ| or |ρ+2|
            for j, t in enumerate(self.members):
                if t.kind in (Kind.POW_RHO, Kind.POW_RHO2):
                    row = [gmpy2.mpfr(0)] * n
                    row[j] = gmpy2.mpfr(1)
                    th.append(gmpy2.mpfr(0) if t.kind is Kind.POW_RHO else gmpy2.const_pi())
                    w.append(gmpy2.mpfr(1))
                    cols.append(row)
            self.cos = np.array([gmpy2.cos(t_) for t_ in th], dtype=object)
            self.w = np.array(w, dtype=object)
            self.F = np.array(cols, dtype=object).reshape(len(th), n)
        self.const = [j for j, t in enumerate(self.members) if t.kind is Kind.CONST]

    def _weighted(self, rho: float, beta: float):
        g = np.abs((1 + gmpy2.mpfr(rho)) - self.cos)
        two = 2 * beta
        if two == int(two):
            root = np.array([gmpy2.sqrt(x) for x in g], dtype=object)
            gb = root ** int(two)
        else:
            b = gmpy2.mpfr(beta)
            gb = np.array([x ** b for x in g], dtype=object)
        return g, self.w * gb

    def minors(self, rho: float, beta: float):
        """(sign, log10, resolved flag) of the leading Wronskian minors.

        Both sides are orthonormalised (modified Gram-Schmidt) against the
        quadrature measure, so the leading minors of Qx^T Qy are products of
        principal-angle sines and the resolution test is scale free.
        """
        n = len(self.members)
        with _ectx(self.bits):
            g, wg = self._weighted(rho, beta)
            v = 1 / g
            live = [x for x, f in zip(v, self.F) if any(f)]
            v_lo, v_hi = min(live), max(live)
            if v_hi == v_lo:
                v_hi = v_lo * (1 + gmpy2.mpfr(2) ** (-self.bits // 2))
            a = 2 / (v_hi - v_lo)
            b = -(v_lo + v_hi) / (v_hi - v_lo)
            x = a * v + b
            T = np.empty((g.size, n), dtype=object)
            T[:, 0] = gmpy2.mpfr(1)
            if n > 1:
                T[:, 1] = x
            for j in range(2, n):
                T[:, j] = 2 * x * T[:, j - 1] - T[:, j - 2]
            sw = np.array([gmpy2.sqrt(y) for y in wg], dtype=object)
            Qx, dx = _mgs(T * sw[:, None])
            Qy, dy = _mgs(self.F * sw[:, None])
            sg, lg, res = _ext_leading_minors(Qx.T @ Qy, self.floor)
            lx = np.cumsum([float(gmpy2.log10(abs(d))) for d in dx])
            ly = np.cumsum([float(gmpy2.log10(abs(d))) for d in dy])
            sx = np.cumprod([1 if d > 0 else -1 for d in dx])
            sy = np.cumprod([1 if d > 0 else -1 for d in dy])
        lead_log = _row_map(float(v_lo), float(v_hi), n)[2]
        fsign, flog = _prefactor(beta, rho, n)
        sg = sg * sx * sy * np.cumprod(fsign).astype(int)
        lg = lg + lx + ly + np.cumsum(flog - lead_log)
        return sg, lg, res

    def values(self, rhos, beta: float) -> np.ndarray:
        """Object matrix of member values, one row per ρ."""
        with _ectx(self.bits):
            rows = []
            for r in rhos:
                _, wg = self._weighted(float(r), beta)
                row = wg @ self.F
                for j in self.const:
                    row[j] = gmpy2.mpfr(1)
                rows.append(row)
            return np.array(rows, dtype=object).reshape(len(rows), len(self.members))


def _mgs(A: np.ndarray):
    """Modified Gram-Schmidt on object columns: (Q, diag R)."""
    Q = A.copy()
    d = []
    for j in range(A.shape[1]):
        col = Q[:, j]
        for i in range(j):
            col = col - (Q[:, i] @ col) * Q[:, i]
        r = gmpy2.sqrt(col @ col)
        if r == 0:
            raise NumericalError("rank deficient family in extended precision")
        Q[:, j] = col / r
        d.append(r)
    return Q, d


def _normalized(A: np.ndarray):
    n = A.shape[0]
    rs = [max(abs(v) for v in A[i]) or gmpy2.mpfr(1) for i in range(n)]
    cs = []
    B = A.copy()
    for i in range(n):
        B[i] = B[i] / rs[i]
    for j in range(A.shape[1]):
        c = max(abs(v) for v in B[:, j]) or gmpy2.mpfr(1)
        cs.append(c)
        B[:, j] = B[:, j] / c
    return B, rs, cs


def _ext_leading_minors(G: np.ndarray, floor: float):
    """Leading minors by elimination without pivoting on the equilibrated matrix."""
    n = G.shape[0]
    B, rs, cs = _normalized(G)
    sg = np.zeros(n, int)
    lg = np.full(n, -np.inf)
    res = np.zeros(n)
    sign, logabs, prod = 1, 0.0, gmpy2.mpfr(1)
    for k in range(n):
        piv = B[k, k]
        if piv == 0:
            break
        sign *= 1 if piv > 0 else -1
        prod *= abs(piv)
        logabs += float(gmpy2.log10(abs(piv))) + float(gmpy2.log10(rs[k])) + float(gmpy2.log10(cs[k]))
        sg[k], lg[k] = sign, logabs
        # the equilibrated leading minor is the running product of pivots
        res[k] = 1.0 if prod > floor else 0.0
        if k + 1 < n:
            f = B[k + 1:, k] / piv
            B[k + 1:, k:] = B[k + 1:, k:] - np.outer(f, B[k, k:])
    return sg, lg, res


def _ext_det(V: np.ndarray, floor: float):
    """Sign, log10|det| and a resolution flag, partial pivoting."""
    n = V.shape[0]
    B, rs, cs = _normalized(V)
    sign, logabs, prod = 1, 0.0, gmpy2.mpfr(1)
    for k in range(n):
        p = max(range(k, n), key=lambda i: abs(B[i, k]))
        if B[p, k] == 0:
            return 0, -math.inf, False
        if p != k:
            B[[k, p]] = B[[p, k]]
            sign = -sign
        piv = B[k, k]
        sign *= 1 if piv > 0 else -1
        prod *= abs(piv)
        logabs += float(gmpy2.log10(abs(piv)))
        if k + 1 < n:
            f = B[k + 1:, k] / piv
            B[k + 1:, k:] = B[k + 1:, k:] - np.outer(f, B[k, k:])
    logabs += sum(float(gmpy2.log10(x)) for x in rs) + sum(float(gmpy2.log10(x)) for x in cs)
    return sign, logabs, bool(prod > floor)


def _kernel_minors_ext(members, beta, rhos):
    """Extended precision leading minors at every ρ in ``rhos`` (one branch)."""
    rhos = np.atleast_1d(rhos)
    out = [None] * rhos.size
    todo = np.arange(rhos.size)
    for level in range(len(EXT_LEVELS)):
        eng = _ExtendedKernels(members, singularity_distance(rhos[todo]), _singular_point(float(rhos[0])), level)
        for i in todo:
            out[i] = eng.minors(float(rhos[i]), beta)
        todo = np.array([i for i in todo if np.any(out[i][2] == 0)], dtype=int)
        if not todo.size:
            break
    return out


def _kernel_discrete(members: Sequence[BasisTerm], beta: float, rho: np.ndarray):
    """Discrete Wronskian det[f_j(ρ_i)], always in extended precision."""
    if len(members) == 1 and members[0].kind is Kind.CONST:
        return (1, 0.0, True)
    for level in range(len(EXT_LEVELS)):
        eng = _ExtendedKernels(members, singularity_distance(rho), _singular_point(float(rho[0])), level)
        with _ectx(eng.bits):
            sign, logabs, ok = _ext_det(eng.values(rho, beta), eng.floor)
        if ok:
            break
    return (int(sign), float(logabs), ok)


# ---------------------------------------------------------------------------
# named families


def cos_sine_family(n: int) -> TrigFamily:
    """(1, c1..cn, sn..s1)."""
    return trig_family([("1",)] + [("c", k) for k in range(1, n + 1)] + [("s", k) for k in range(n, 0, -1)])


def theta_cos_family(n: int) -> TrigFamily:
    """(1, θ, s1, c1, θc1, ..., sn, cn, θcn)."""
    spec = [("1",), ("theta",)]
    for k in range(1, n + 1):
        spec += [("s", k), ("c", k), ("tc", k)]
    return trig_family(spec)


def theta_sine_family(n: int) -> TrigFamily:
    """(1, c1, s1, θs1, ..., cn, sn, θsn)."""
    spec = [("1",)]
    for k in range(1, n + 1):
        spec += [("c", k), ("s", k), ("ts", k)]
    return trig_family(spec)


def mixed_trig_family(n0: int, k0: int, l0: int) -> TrigFamily:
    """(1, c1, s1, θs1, ..., c_n0, s_n0, θs_n0, c_{n0+1}..c_k0, s_k0..s_{max(l0,n0)+1}).

    Sines already present in the θ-block are not repeated, so for l0 < n0 the
    tail stops at s_{n0+1}.
    """
    if not (k0 > n0 >= 1 and k0 > l0 >= 0):
        raise DomainError("need k0 > n0 >= 1 and k0 > l0 >= 0")
    spec = [("1",)]
    for k in range(1, n0 + 1):
        spec += [("c", k), ("s", k), ("ts", k)]
    spec += [("c", k) for k in range(n0 + 1, k0 + 1)]
    spec += [("s", k) for k in range(k0, max(l0, n0), -1)]
    return trig_family(spec)


def _branch_interval(branch: str) -> tuple:
    if branch == "positive":
        return (0.0, math.inf)
    if branch == "negative":
        return (-math.inf, -2.0)
    raise DomainError(f"unknown branch {branch!r}")


def _split(vartheta: float):
    if not 0.0 <= vartheta <= math.pi:
        raise DomainError("split angle must lie in [0, pi]")
    return (0.0, vartheta), (vartheta, math.pi)


def _side(E, csd: list) -> list:
    # an empty side (split at 0 or pi) contributes nothing
    return [] if E[1] <= E[0] else csd


def two_interval_family(n: int, vartheta: float, beta: float, branch: str = "positive",
                        lead_const: bool = False) -> KernelFamily:
    """(C0..Cn, Sn..S1 on [0,ϑ]; C0..Cn on [ϑ,π])."""
    J1, J2 = _split(vartheta)
    mem = _side(J1, [C(k, J1, beta) for k in range(n + 1)] + [S(k, J1, beta) for k in range(n, 0, -1)])
    mem += _side(J2, [C(k, J2, beta) for k in range(n + 1)])
    if lead_const:
        mem = [CONST] + mem
    return KernelFamily(tuple(mem), _branch_interval(branch))


def _with_d(m: int, n: int, J, beta: float, tail_sines: bool) -> list:
    mem = [C(0, J, beta)]
    for k in range(1, m):
        mem += [C(k, J, beta), S(k, J, beta), D(k, J, beta)]
    mem += [C(k, J, beta) for k in range(m, n + 1)]
    if tail_sines:
        mem += [S(k, J, beta) for k in range(n, m - 1, -1)]
    return mem


def one_sided_d_family(m: int, n: int, vartheta: float, beta: float, branch: str = "positive",
                       lead_const: bool = False) -> KernelFamily:
    """D-kernels on [0,ϑ] only; [ϑ,π] carries C0..Cn."""
    if n <= m - 1:
        raise DomainError("need n >= m")
    J1, J2 = _split(vartheta)
    mem = _side(J1, _with_d(m, n, J1, beta, True))
    mem += _side(J2, [C(k, J2, beta) for k in range(n + 1)])
    if lead_const:
        mem = [CONST] + mem
    return KernelFamily(tuple(mem), _branch_interval(branch))


def two_sided_d_family(m: int, n: int, vartheta: float, beta: float, branch: str = "positive",
                       lead_const: bool = False) -> KernelFamily:
    """D-kernels on both [0,ϑ] and [ϑ,π]."""
    if n <= m - 1:
        raise DomainError("need n >= m")
    J1, J2 = _split(vartheta)
    mem = _side(J1, _with_d(m, n, J1, beta, True))
    mem += _side(J2, _with_d(m, n, J2, beta, False))
    if lead_const:
        mem = [CONST] + mem
    return KernelFamily(tuple(mem), _branch_interval(branch))


def power_family(m: int, beta: float, branch: str = "positive") -> KernelFamily:
    """(1, |ρ|^β, |ρ+2|^β, C0..C_{2m-1}, S_{2m-1}..S1) on [0, π]."""
    E = (0.0, math.pi)
    mem = [CONST, BasisTerm(Kind.POW_RHO, beta=beta), BasisTerm(Kind.POW_RHO2, beta=beta)]
    mem += [C(k, E, beta) for k in range(2 * m)] + [S(k, E, beta) for k in range(2 * m - 1, 0, -1)]
    return KernelFamily(tuple(mem), _branch_interval(branch))


def reference_families() -> dict:
    """Small instances of every family builder, used by the acceptance suite.

    Kernel families appear at both branches and both exponent signs, with split
    angles below, at and above π/2.
    """
    q = math.pi
    return {
        "theta_sine(2)": theta_sine_family(2),
        "cos_sine(2)": cos_sine_family(2),
        "mixed(1,2,0)": mixed_trig_family(1, 2, 0),
        "mixed(1,3,1)": mixed_trig_family(1, 3, 1),
        "two_interval(2,pi/2,-1/2,+)": two_interval_family(2, q / 2, -0.5, "positive"),
        "two_interval(2,3pi/4,3/2,-)": two_interval_family(2, 3 * q / 4, 1.5, "negative"),
        "one_sided_d(2,3,pi/4,-1/2,+)": one_sided_d_family(2, 3, q / 4, -0.5, "positive"),
        "one_sided_d(2,3,pi/2,-1/2,-)": one_sided_d_family(2, 3, q / 2, -0.5, "negative"),
        "two_sided_d(2,3,3pi/4,-1/2,+)": two_sided_d_family(2, 3, 3 * q / 4, -0.5, "positive"),
        "two_sided_d(2,3,pi/3,3/2,-)": two_sided_d_family(2, 3, q / 3, 1.5, "negative"),
        "power(1,-1/2,+)": power_family(1, -0.5, "positive"),
        "power(2,3/2,-)": power_family(2, 1.5, "negative"),
    }


# ---------------------------------------------------------------------------
# Wronskians


def continuous_wronskian(family: FunctionFamily, t: float, size: Optional[int] = None) -> float:
    """det(f_j^(i)(t)) for the leading ``size`` members (float, may under/overflow)."""
    size = family.size if size is None else size
    if not 1 <= size <= family.size:
        raise DomainError(f"size must lie in [1, {family.size}]")
    lo, hi = family.interval
    if not lo < t < hi:
        raise DomainError(f"t={t!r} outside {family.interval}")
    sub = _truncate(family, size)
    smp = sub.wronskian_samples([t])
    return float(smp.sign[0, size - 1]) * 10.0 ** float(smp.log10[0, size - 1])


def _truncate(family: FunctionFamily, size: int) -> FunctionFamily:
    if isinstance(family, TrigFamily):
        return TrigFamily(family.members[:size], family.interval)
    if isinstance(family, KernelFamily):
        return KernelFamily(family.members[:size], family.interval)
    raise TypeError(type(family))


def discrete_wronskian(family: FunctionFamily, nodes: Sequence[float]) -> float:
    """det(f_j(t_i)) over the leading len(nodes) members, nodes in given order."""
    nodes = np.asarray(nodes, dtype=float)
    if nodes.size == 0 or nodes.size > family.size:
        raise DomainError(f"need between 1 and {family.size} nodes")
    if np.unique(nodes).size != nodes.size:
        raise DomainError("discrete Wronskian nodes must be distinct")
    lo, hi = family.interval
    if np.any((nodes <= lo) | (nodes >= hi)):
        raise DomainError("nodes must lie inside the family interval")
    order = np.argsort(nodes, kind="stable")
    # permutation parity of the sort
    perm_sign = _perm_sign(order)
    sign, log10, _ = family.discrete_samples([nodes])[0]
    return float(sign * perm_sign) * 10.0 ** log10


def _perm_sign(order: np.ndarray) -> int:
    seen = np.zeros(order.size, bool)
    sign = 1
    for i in range(order.size):
        if seen[i]:
            continue
        j, cyc = i, 0
        while not seen[j]:
            seen[j] = True
            j = order[j]
            cyc += 1
        if cyc % 2 == 0:
            sign = -sign
    return sign


@dataclass
class WronskianReport:
    labels: list
    grid: np.ndarray
    min_log10_abs: list
    argmin: list
    sign: list
    sign_constant: list
    resolved: list
    min_resolution: list
    discrete_min_log10_abs: list = field(default_factory=list)
    discrete_sign_constant: list = field(default_factory=list)
    discrete_resolved_fraction: list = field(default_factory=list)

    @property
    def sizes(self) -> list[int]:
        return list(range(1, len(self.labels) + 1))

    @property
    def min_abs(self) -> list[float]:
        return [10.0 ** x if x > -300 else 0.0 for x in self.min_log10_abs]

    @property
    def minima_positive(self) -> bool:
        return all(np.isfinite(x) for x in self.min_log10_abs)

    @property
    def is_ect(self) -> bool:
        """No sign change, no vanishing, every sample resolved."""
        return self.minima_positive and all(self.sign_constant) and all(self.resolved)

    @property
    def discrete_ok(self) -> bool:
        return all(self.discrete_sign_constant)

    def to_json(self) -> dict:
        return {
            "labels": self.labels,
            "grid": {"n": int(self.grid.size), "min": float(self.grid.min()), "max": float(self.grid.max())},
            "sizes": [
                {
                    "size": k + 1,
                    "min_log10_abs": _jf(self.min_log10_abs[k]),
                    "argmin": float(self.argmin[k]),
                    "sign": int(self.sign[k]),
                    "sign_constant": bool(self.sign_constant[k]),
                    "resolved": bool(self.resolved[k]),
                    "min_resolution": float(self.min_resolution[k]),
                }
                for k in range(len(self.labels))
            ],
            "discrete": [
                {"size": k + 1, "min_log10_abs": _jf(a), "sign_constant": bool(b), "resolved_fraction": float(c)}
                for k, (a, b, c) in enumerate(
                    zip(self.discrete_min_log10_abs, self.discrete_sign_constant, self.discrete_resolved_fraction)
                )
            ],
            "ect": self.is_ect,
        }


def _jf(x: float):
    return x if np.isfinite(x) else None


def verify_ect(
    family: FunctionFamily,
    grid=None,
    n_grid: int = 400,
    discrete_tuples: int = 10,
    seed: int = 0,
) -> WronskianReport:
    """Sample every leading continuous Wronskian on ``grid`` (default: 400 points).

    Discrete Wronskians are sampled at ``discrete_tuples`` random ordered node
    tuples per size drawn from the grid.
    """
    grid = family.default_grid(n_grid) if grid is None else np.asarray(grid, dtype=float)
    lo, hi = family.interval
    if np.any((grid <= lo) | (grid >= hi)):
        raise DomainError("grid must lie inside the open interval")
    smp = family.wronskian_samples(grid)
    n = family.size
    mins, argmin, signs, const, resolved, res = [], [], [], [], [], []
    for k in range(n):
        lg = smp.log10[:, k]
        i = int(np.argmin(lg))
        mins.append(float(lg[i]))
        argmin.append(float(grid[i]))
        sg = smp.sign[:, k]
        nz = sg[sg != 0]
        constant = bool(nz.size == sg.size and np.all(nz == nz[0]))
        const.append(constant)
        signs.append(int(nz[0]) if constant else 0)
        resolved.append(bool(np.all(smp.smin[:, k] > RESOLUTION)))
        res.append(float(smp.smin[:, k].min()))
    report = WronskianReport(family.labels(), grid, mins, argmin, signs, const, resolved, res)
    if discrete_tuples:
        rng = np.random.default_rng(seed)
        for k in range(1, n + 1):
            tuples = [np.sort(rng.choice(grid, size=k, replace=False)) for _ in range(discrete_tuples)]
            vals = family.discrete_samples(tuples)
            good = [v for v in vals if v[2]]
            sg = {v[0] for v in good}
            report.discrete_min_log10_abs.append(min((v[1] for v in good), default=-math.inf))
            report.discrete_sign_constant.append(len(sg) <= 1 and 0 not in sg)
            report.discrete_resolved_fraction.append(len(good) / len(vals))
    return report


# ---------------------------------------------------------------------------
# zero counting


@dataclass
class ZeroReport:
    brackets: list  # (a, b, sign of f at a)
    roots: np.ndarray
    count: int
    certified: bool
    possibly_multiple: list = field(default_factory=list)
    touches: list = field(default_factory=list)
    grid_size: int = 0

    @property
    def simple_count(self) -> int:
        return self.count - len(self.possibly_multiple)

    def to_json(self) -> dict:
        return {
            "count": self.count,
            "simple_count": self.simple_count,
            "certified": self.certified,
            "roots": [float(r) for r in self.roots],
            "brackets": [[float(a), float(b), int(s)] for a, b, s in self.brackets],
            "possibly_multiple": [float(r) for r in self.possibly_multiple],
            "touches": [float(r) for r in self.touches],
            "grid_size": self.grid_size,
        }


def _grid(lo: float, hi: float, n: int, spacing: str) -> np.ndarray:
    if spacing == "linear":
        return np.linspace(lo, hi, n)
    if spacing == "log":
        if lo > 0:
            return np.geomspace(lo, hi, n)
        if hi < 0:
            return -np.geomspace(-hi, -lo, n)[::-1]
        raise DomainError("log spacing needs an interval of one sign")
    raise DomainError(f"unknown spacing {spacing!r}")


def _sign_changes(values: np.ndarray, tol: float, thr=None):
    """Indices (i, j) of consecutive non-negligible samples with opposite signs,
    plus indices of negligible runs that do not change sign (touches).
    ``thr`` (scalar or per-sample) overrides the relative threshold."""
    if thr is None:
        scale = float(np.max(np.abs(values))) if values.size else 0.0
        thr = tol * scale
    sig = np.where(np.abs(values) <= thr, 0, np.sign(values)).astype(int)
    idx = np.flatnonzero(sig)
    pairs, touches = [], []
    for a, b in zip(idx[:-1], idx[1:]):
        if sig[a] != sig[b]:
            pairs.append((int(a), int(b)))
        elif b - a > 1:
            touches.append(int((a + b) // 2))
    return pairs, touches, sig


def _local_order(f, r: float, roots, lo: float, hi: float, width: float) -> float:
    """log2 |f(r+2h)-f(r-2h)| / |f(r+h)-f(r-h)|: about 1 at a simple root,
    3 at a triple one.  Returns inf when h cannot be kept well above ``width``."""
    others = [abs(x - r) for x in roots if x != r] + [r - lo, hi - r]
    h = min(1e-3 * (hi - lo), 0.2 * min(others))
    if h < 1e3 * width:
        return math.inf
    x = np.array([r - 2 * h, r - h, r + h, r + 2 * h])
    v = np.asarray(f(x), dtype=float)
    d1, d2 = abs(v[2] - v[1]), abs(v[3] - v[0])
    if d1 == 0:
        return math.inf
    return math.log2(d2 / d1)


def count_zeros(
    f: Callable[[np.ndarray], np.ndarray],
    interval: Sequence[float],
    n0: int = 2048,
    max_n: int = 2**16,
    width: float = BISECT_WIDTH,
    tol: float = ZERO_TOL,
    spacing: str = "linear",
    flat: float = FLAT_DERIV,
) -> ZeroReport:
    """Count sign changes of a vectorised ``f`` on a closed interval.

    The grid is doubled until the count is unchanged over two consecutive
    doublings (certified) or ``max_n`` is reached.  Each sign change is refined
    by bisection to ``width``.  A root whose scaled slope
    |f'| * (hi - lo) / max|f| falls below ``flat`` is a candidate multiple root;
    it is flagged possibly multiple unless the local order estimate says simple
    (badly scaled but simple roots of steep combinations otherwise get flagged).
    """
    lo, hi = float(interval[0]), float(interval[1])
    if not hi > lo:
        raise DomainError("empty interval")
    n = n0
    history = []
    certified = False
    while True:
        grid = _grid(lo, hi, n, spacing)
        vals = np.asarray(f(grid), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise NumericalError("function returned non-finite values")
        pairs, touches, _ = _sign_changes(vals, tol)
        history.append(len(pairs))
        if len(history) >= 3 and history[-1] == history[-2] == history[-3]:
            certified = True
            break
        if n * 2 > max_n:
            break
        n *= 2
    scale = float(np.max(np.abs(vals))) or 1.0
    a = np.array([grid[i] for i, _ in pairs])
    b = np.array([grid[j] for _, j in pairs])
    fa = np.array([vals[i] for i, _ in pairs])
    brackets = [(float(x), float(y), int(np.sign(v))) for x, y, v in zip(a, b, fa)]
    if a.size:
        a, b = a.copy(), b.copy()
        while np.max(b - a) > width:
            mid = 0.5 * (a + b)
            fm = np.asarray(f(mid), dtype=float)
            same = np.sign(fm) == np.sign(fa)
            zero = fm == 0
            a = np.where(same & ~zero, mid, a)
            b = np.where(~same | zero, mid, b)
            a = np.where(zero, mid, a)
        roots = 0.5 * (a + b)
        h = max(1e-6 * (hi - lo), 1e-9)
        lo_pt = np.maximum(roots - h, lo)
        hi_pt = np.minimum(roots + h, hi)
        slope = (np.asarray(f(hi_pt)) - np.asarray(f(lo_pt))) / (hi_pt - lo_pt)
        rel = np.abs(slope) * (hi - lo) / scale
        multiple = [float(r) for r, s in zip(roots, rel)
                    if s < flat and _local_order(f, float(r), roots, lo, hi, width) > 2]
    else:
        roots = np.zeros(0)
        multiple = []
    return ZeroReport(
        brackets, roots, len(pairs), certified, multiple,
        [float(grid[i]) for i in touches], grid_size=int(grid.size),
    )


# ---------------------------------------------------------------------------
# random Chebyshev-bound search


@dataclass
class BoundCheck:
    passed: bool
    trials: int
    bound: int
    max_zeros: int
    histogram: dict
    counterexample: Optional[np.ndarray] = None
    significant: float = 1.0  # mean fraction of grid samples above the noise bound
    rechecked: int = 0

    def __bool__(self):
        return self.passed

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "trials": self.trials,
            "bound": self.bound,
            "max_zeros": self.max_zeros,
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
            "counterexample": None if self.counterexample is None
            else [float(c) for c in self.counterexample],
            "significant": self.significant,
            "rechecked": self.rechecked,
        }


NOISE_REL = 1e-12


def _exact_count(family: FunctionFamily, coef: np.ndarray, grid: np.ndarray) -> int:
    """Zero count of a suspected counterexample, evaluated without cancellation."""
    if isinstance(family, KernelFamily):
        from .quadrature import ExtendedBasis
        eb = ExtendedBasis(family.members, (grid[0], grid[-1]))
        comb = eb.combination(coef)
        return count_zeros(comb, (grid[0], grid[-1]), n0=grid.size, max_n=2 * grid.size,
                           tol=0.0, spacing="log").count

    def comb(x):
        return family.values(x) @ coef

    return count_zeros(comb, (grid[0], grid[-1]), n0=grid.size, max_n=4 * grid.size).count


def _ext_solve(A: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Gaussian elimination with partial pivoting on object arrays."""
    A = A.copy()
    y = y.copy()
    n = A.shape[0]
    for k in range(n):
        piv = k + int(np.argmax([abs(x) for x in A[k:, k]]))
        if A[piv, k] == 0:
            raise ZeroDivisionError("singular system")
        if piv != k:
            A[[k, piv]] = A[[piv, k]]
            y[[k, piv]] = y[[piv, k]]
        f = A[k + 1:, k] / A[k, k]
        A[k + 1:, k:] = A[k + 1:, k:] - np.outer(f, A[k, k:])
        y[k + 1:] = y[k + 1:] - f * y[k]
    x = np.empty(n, dtype=object)
    for k in range(n - 1, -1, -1):
        x[k] = (y[k] - A[k, k + 1:] @ x[k + 1:]) / A[k, k]
    return x


def _kernel_bound_check(family: "KernelFamily", trials: int, seed: int, grid: np.ndarray,
                        interpolant_fraction: float) -> BoundCheck:
    """Same search as cheb_bound_check, with the sample matrix and every
    combination evaluated in extended precision so the forced-zero trials stay
    resolved."""
    from .quadrature import ExtendedBasis
    N = family.size
    eb = ExtendedBasis(family.members, (grid[0], grid[-1]))
    bits = int(eb.dps * 3.33) + 8
    with mpmath.workdps(eb.dps):
        rows = [eb.row(float(r)) for r in grid]
    with _ectx(bits):
        A = np.array([[_to_mpfr(x, bits) for x in row] for row in rows], dtype=object)
        scale = np.array([max(abs(x) for x in A[:, j]) or gmpy2.mpfr(1) for j in range(N)],
                         dtype=object)
        An = A / scale
        absA = np.abs(An)
        noise = gmpy2.mpfr(10) ** (-(eb.dps - 10))
        rng = np.random.default_rng(seed)
        n_interp = int(round(trials * interpolant_fraction)) if N > 1 else 0
        coarse = np.arange(2, grid.size - 2, 3)
        hist: dict = {}
        worst = 0
        for t in range(trials):
            if t < n_interp:
                pick = np.sort(rng.choice(coarse, size=N - 1, replace=False))
                M = An[pick]
                free = int(rng.integers(N))
                keep = [j for j in range(N) if j != free]
                try:
                    x = _ext_solve(M[:, keep], -M[:, free])
                except ZeroDivisionError:
                    continue
                c = np.empty(N, dtype=object)
                c[free] = gmpy2.mpfr(1)
                c[keep] = x
            else:
                c = np.array([gmpy2.mpfr(float(v)) for v in rng.normal(size=N)], dtype=object)
            vals = An @ c
            thr = noise * (absA @ np.abs(c))
            sig = np.array([0 if abs(v) <= h else (1 if v > 0 else -1) for v, h in zip(vals, thr)])
            nz = sig[sig != 0]
            cnt = int(np.count_nonzero(nz[1:] != nz[:-1]))
            hist[cnt] = hist.get(cnt, 0) + 1
            worst = max(worst, cnt)
            if cnt > N - 1:
                coef = np.array([float(v) for v in c / scale])
                return BoundCheck(False, t + 1, N - 1, cnt, hist, coef, 1.0, 0)
    return BoundCheck(True, trials, N - 1, worst, hist, None, 1.0, 0)


def cheb_bound_check(
    family: FunctionFamily,
    trials: int = 1000,
    seed: int = 0,
    grid=None,
    n_grid: int = 2048,
    interpolant_fraction: float = 0.5,
    exact_kernels: bool = True,
    n_exact: int = 384,
) -> BoundCheck:
    """Random search for a combination with more than N-1 zeros.

    Half of the trials (by default) are uniform directions on the unit sphere
    of column-normalised coefficients; the rest are combinations forced to
    vanish at N-1 random grid nodes, which sit at the bound and probe it much
    harder than random directions do.  A grid sign only counts where the value
    beats the cancellation bound NOISE_REL * |A| @ |c|.  Any count above N-1 is
    re-checked without cancellation (mpmath for kernel families).  With
    ``exact_kernels`` kernel families skip the double path entirely and run on
    an ``n_exact``-point mpmath grid.
    """
    N = family.size
    if isinstance(family, KernelFamily) and exact_kernels:
        grid = family.default_grid(n_exact) if grid is None else np.asarray(grid, dtype=float)
        return _kernel_bound_check(family, trials, seed, grid, interpolant_fraction)
    if grid is None:
        grid = family.default_grid(n_grid)
    grid = np.asarray(grid, dtype=float)
    A = family.values(grid)
    scale = np.max(np.abs(A), axis=0)
    scale[scale == 0] = 1.0
    An = A / scale
    absA = np.abs(An)
    rng = np.random.default_rng(seed)
    n_interp = int(round(trials * interpolant_fraction)) if N > 1 else 0
    coarse = np.arange(4, grid.size - 4, 8)
    hist: dict = {}
    worst = 0
    sig_total = 0.0
    rechecked = 0
    for t in range(trials):
        if t < n_interp:
            pick = np.sort(rng.choice(coarse, size=N - 1, replace=False))
            _, _, vt = np.linalg.svd(An[pick])
            c = vt[-1]
        else:
            c = rng.normal(size=N)
            c /= np.linalg.norm(c)
        vals = An @ c
        thr = NOISE_REL * (absA @ np.abs(c))
        sig_total += float(np.mean(np.abs(vals) > thr))
        cnt = len(_sign_changes(vals, 0.0, thr)[0])
        hist[cnt] = hist.get(cnt, 0) + 1
        worst = max(worst, cnt)
        if cnt > N - 1:
            rechecked += 1
            coef = c / scale
            exact = _exact_count(family, coef, grid)
            if exact > N - 1:
                return BoundCheck(False, t + 1, N - 1, exact, hist, coef,
                                  sig_total / (t + 1), rechecked)
    return BoundCheck(True, trials, N - 1, worst, hist, None, sig_total / max(trials, 1), rechecked)
