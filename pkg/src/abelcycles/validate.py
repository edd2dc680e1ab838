"""Ground truth by direct integration of the perturbed equation.

The reduced equation is integrated in u = |1-p| |y|, which is x^(1-p) on the
branch where the sign of y matches the sign of 1-p and positive on every
branch, so escape from the annulus shows up as u reaching 0.  θ is the
independent variable, so the switching line is handled by splitting the
integration into two legs at θ1; no event location is needed.
"""
from __future__ import annotations

import csv
import enum
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .chebyshev import ZeroReport, count_zeros
from .domain import (
    ANGLE_TOL,
    TWO_PI,
    AbelEquation,
    CaseTag,
    DomainError,
    NumericalError,
    base_sign,
)
from .domain import _trig_eval

RTOL = float(os.environ.get("ABELCYCLES_ODE_RTOL", "1e-12"))
ATOL = float(os.environ.get("ABELCYCLES_ODE_ATOL", "1e-14"))
METHOD = os.environ.get("ABELCYCLES_ODE_METHOD", "RK45")
DEFAULT_LADDER = (2e-3, 1e-3, 5e-4, 2.5e-4)
BLOWUP = 1e6
ORDER_BAND = 0.3
CHUNK = 512


class Status(str, enum.Enum):
    COMPLETED = "completed"
    ESCAPED = "escaped"
    STEP_FAILURE = "step-failure"


@dataclass(frozen=True)
class ReturnMapSample:
    epsilon: float
    rho0: float
    rho_end: float
    status: Status = Status.COMPLETED

    @property
    def displacement(self) -> float:
        return self.rho_end - self.rho0

    @property
    def completed(self) -> bool:
        return self.status is Status.COMPLETED

    def row(self) -> list:
        return [self.epsilon, self.rho0, self.rho_end, self.displacement, self.status.value]


# ---------------------------------------------------------------------------
# vector field


def _legs(eq: AbelEquation, extra_breaks: Sequence[float] = ()) -> list[tuple]:
    """(a, b, zone) pieces of [0, 2π]; zone 0 is the θ < θ1 table."""
    t1 = eq.theta1
    cuts = {0.0, TWO_PI}
    if t1 < TWO_PI - ANGLE_TOL:
        cuts.add(t1)
    cuts.update(float(b) for b in extra_breaks if 0 < b < TWO_PI)
    pts = sorted(cuts)
    return [(a, b, 0 if b <= t1 + ANGLE_TOL else 1) for a, b in zip(pts[:-1], pts[1:])]


def _tables(eq: AbelEquation, epsilon: float, zone: int):
    """Trig tables of the drive sinθ + εP1 + ε²P2 and of εQ̃1 + ε²Q̃2."""
    pick = (lambda poly: poly.plus) if zone == 0 else (lambda poly: poly.minus)
    n = max(eq.m, 1) + 1
    drive = np.zeros((n, 2))
    drive[1, 0] = 1.0
    drive[: eq.m + 1] += epsilon * pick(eq.P1) + epsilon**2 * pick(eq.P2)
    coup = np.zeros((n, 2))
    coup[: eq.m + 1] = epsilon * pick(eq.Q1t) + epsilon**2 * pick(eq.Q2t)
    return drive, coup


def _branch_sign(eq: AbelEquation, rho0: np.ndarray) -> int:
    signs = {base_sign(float(r)) for r in rho0}
    if len(signs) != 1:
        raise DomainError("initial values must lie on one branch of the annulus")
    ann = eq.annulus()
    bad = [float(r) for r in rho0 if not ann.contains(float(r))]
    if bad:
        raise DomainError(f"rho0={bad[0]!r} is outside the annulus {ann.y_intervals}")
    return signs.pop()


def _integrate(eq: AbelEquation, epsilon: float, rho0: np.ndarray, extra_breaks=()):
    """End values and status codes for one vector of initial values."""
    sgn = _branch_sign(eq, rho0)
    L = abs(1 - eq.exps.p)
    a = float(eq.alpha)
    u = L * np.abs(rho0)
    alive = np.ones(rho0.size, dtype=bool)
    failed = False
    for lo, hi, zone in _legs(eq, extra_breaks):
        drive, coup = _tables(eq, epsilon, zone)

        def rhs(t, u, drive=drive, coup=coup):
            d = _trig_eval(drive, t)
            g = _trig_eval(coup, t)
            return sgn * L * (d + g * (np.abs(u) / L) ** a)

        sol = solve_ivp(rhs, (lo, hi), u, method=METHOD, rtol=RTOL, atol=ATOL)
        if sol.status != 0:
            failed = True
            break
        path = sol.y
        ok = np.all(np.isfinite(path), axis=1) & np.all(path > 0, axis=1)
        ok &= np.max(np.abs(path), axis=1) < BLOWUP * L * (1 + np.abs(rho0))
        alive &= ok
        u = path[:, -1]
    end = sgn * u / L
    status = np.where(alive, 0, 1)
    if failed:
        status[:] = 2
        end = np.full(rho0.shape, np.nan)
    return end, status


_CODES = (Status.COMPLETED, Status.ESCAPED, Status.STEP_FAILURE)


def _chunk_job(args):
    eq, epsilon, rho0, extra = args
    return _integrate(eq, epsilon, rho0, extra)


def return_map(eq: AbelEquation, epsilon: float, rho0, jobs: int = 1,
               extra_breaks: Sequence[float] = ()) -> list[ReturnMapSample]:
    """Return-map samples y_ε(2π, ρ) for a vector of reduced initial values.

    Initial values are integrated together in chunks (the scalar equation is
    decoupled, so a vector system costs about one solve per chunk).  With
    ``jobs`` > 1 the chunks go to worker processes; results are merged by index.
    """
    if not epsilon >= 0:
        raise DomainError("epsilon must be non-negative")
    rho0 = np.atleast_1d(np.asarray(rho0, dtype=float))
    chunks = [rho0[s:s + CHUNK] for s in range(0, rho0.size, CHUNK)]
    args = [(eq, float(epsilon), c, tuple(extra_breaks)) for c in chunks]
    if jobs > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(_chunk_job, args))
    else:
        parts = [_chunk_job(a) for a in args]
    out = []
    for c, (end, status) in zip(chunks, parts):
        out += [ReturnMapSample(float(epsilon), float(r), float(e), _CODES[int(s)])
                for r, e, s in zip(c, end, status)]
    return out


def flow_map(eq: AbelEquation, epsilon: float, rho0: float,
             extra_breaks: Sequence[float] = ()) -> ReturnMapSample:
    return return_map(eq, epsilon, [rho0], extra_breaks=extra_breaks)[0]


def displacement(eq: AbelEquation, epsilon: float, rho0, jobs: int = 1) -> np.ndarray:
    """y_ε(2π, ρ) - ρ, NaN where the orbit did not complete."""
    smp = return_map(eq, epsilon, rho0, jobs=jobs)
    return np.array([s.displacement if s.completed else np.nan for s in smp])


def write_csv(samples: Sequence[ReturnMapSample], target=None) -> str:
    """CSV with columns epsilon, rho0, rho_end, displacement, status."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epsilon", "rho0", "rho_end", "displacement", "status"])
    for s in samples:
        w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in s.row()])
    text = buf.getvalue()
    if target is not None:
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


# ---------------------------------------------------------------------------
# the original x-equation, for cross-checks


def x_flow(eq: AbelEquation, epsilon: float, x0: float, theta=None):
    """Integrate dx/dθ = (sinθ+εP1+ε²P2) x^p + (εQ1+ε²Q2) x^q directly.

    Integer exponents keep both powers real for x of either sign.  Returns
    x(2π), or x at the sorted angles ``theta`` when given.
    """
    p, q = eq.exps.p, eq.exps.q
    if x0 == 0:
        raise DomainError("x0 must be non-zero")
    theta = None if theta is None else np.sort(np.atleast_1d(np.asarray(theta, dtype=float)))
    x = np.array([float(x0)])
    out = []
    for lo, hi, zone in _legs(eq):
        drive, _ = _tables(eq, epsilon, zone)
        pick = (lambda poly: poly.plus) if zone == 0 else (lambda poly: poly.minus)
        coup = np.zeros_like(drive)
        coup[: eq.m + 1] = epsilon * pick(eq.Q1) + epsilon**2 * pick(eq.Q2)

        def rhs(t, x, drive=drive, coup=coup):
            return _trig_eval(drive, t) * x**p + _trig_eval(coup, t) * x**q

        te = None
        if theta is not None:
            te = theta[(theta >= lo) & (theta <= hi)]
            if out and te.size and te[0] == lo:
                te = te[1:]
        sol = solve_ivp(rhs, (lo, hi), x, method=METHOD, rtol=RTOL, atol=ATOL, t_eval=te)
        if sol.status != 0:
            raise NumericalError(f"x-equation integration failed: {sol.message}")
        if theta is not None:
            out.append(sol.y[0])
        x = sol.y[:, -1]
    if theta is not None:
        return np.concatenate(out)
    return float(x[0])


def unperturbed_x_power(theta, rho: float, p: int):
    """x0^(1-p)(θ, ρ) = (1-p)(1-cosθ) + ρ^(1-p)."""
    theta = np.asarray(theta, dtype=float)
    return (1 - p) * (1 - np.cos(theta)) + float(rho) ** (1 - p)


def reduced_initial(x0: float, p: int) -> float:
    """ρ̂ = ρ^(1-p)/(1-p)."""
    return float(x0) ** (1 - p) / (1 - p)


# ---------------------------------------------------------------------------
# Melnikov estimates from the flow


@dataclass
class MelnikovEstimate:
    rho: float
    eps: tuple
    ratios: np.ndarray  # displacement / ε
    m1: float
    m2: float
    orders: np.ndarray
    converged: bool
    m1_reference: Optional[float] = None

    def to_json(self) -> dict:
        return {
            "rho": self.rho,
            "eps": list(self.eps),
            "ratios": [float(r) for r in self.ratios],
            "m1": self.m1,
            "m2": self.m2,
            "orders": [float(o) for o in self.orders],
            "converged": self.converged,
            "m1_reference": self.m1_reference,
        }


def melnikov_estimate(eq: AbelEquation, rho: float, eps_list: Sequence[float] = DEFAULT_LADDER,
                      m1_closed: Optional[float] = None) -> MelnikovEstimate:
    """Extrapolate displacement/ε to ε = 0.

    A polynomial in ε (degree up to 2) through displacement/ε gives M1 and M2.
    With a closed-form M1 value, M2 comes from (d - εM1)/ε² instead and the
    observed order is measured on |d/ε - M1|; otherwise on successive
    differences of d/ε.
    """
    eps = tuple(float(e) for e in eps_list)
    if len(eps) < 3 or any(b >= a for a, b in zip(eps[:-1], eps[1:])) or eps[-1] <= 0:
        raise DomainError("need at least three decreasing positive epsilons")
    d = []
    for e in eps:
        s = flow_map(eq, e, rho)
        if not s.completed:
            raise NumericalError(f"orbit from rho={rho} {s.status.value} at eps={e}")
        d.append(s.displacement)
    d = np.array(d)
    E = np.array(eps)
    r = d / E
    deg = min(2, len(eps) - 1)
    fit = np.polynomial.polynomial.polyfit(E, r, deg)
    m1 = float(fit[0])
    if m1_closed is not None:
        s2 = (d - E * m1_closed) / E**2
        m2 = float(np.polynomial.polynomial.polyfit(E, s2, 1)[0])
        err = np.abs(r - m1_closed)
    else:
        m2 = float(fit[1])
        err = np.abs(np.diff(r))
        E = E[:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        orders = np.log(err[:-1] / err[1:]) / np.log(E[:-1] / E[1:])
    converged = bool(orders.size and np.all(np.abs(orders - 1) <= ORDER_BAND))
    return MelnikovEstimate(float(rho), eps, r, m1, m2, orders, converged, m1_closed)


# ---------------------------------------------------------------------------
# limit cycles


@dataclass
class CycleReport:
    epsilon: float
    window: tuple
    zeros: ZeroReport
    escaped: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return self.zeros.count

    @property
    def fixed_points(self) -> np.ndarray:
        return np.asarray(self.zeros.roots)

    def to_json(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "window": list(self.window),
            "fixed_points": [float(r) for r in self.fixed_points],
            "count": self.count,
            "escaped": [list(iv) for iv in self.escaped],
            "zeros": self.zeros.to_json(),
        }


def count_limit_cycles(eq: AbelEquation, epsilon: float, window: Sequence[float],
                       grid: int = 128, jobs: int = 1) -> CycleReport:
    """Fixed points of the return map in ``window`` by sign changes of the
    displacement.  Grid cells whose orbits escape are cut out and reported."""
    lo, hi = float(window[0]), float(window[1])
    if grid < 16:
        raise DomainError("grid must have at least 16 points")
    if not hi > lo:
        raise DomainError("empty window")
    _branch_sign(eq, np.array([lo, hi]))

    def f(r):
        return displacement(eq, epsilon, r, jobs=jobs)

    probe = np.linspace(lo, hi, grid)
    vals = f(probe)
    good = np.isfinite(vals)
    if good.all():
        rep = count_zeros(f, (lo, hi), n0=grid, max_n=16 * grid)
        return CycleReport(float(epsilon), (lo, hi), rep)
    # split into runs of completed samples
    escaped, runs, start = [], [], None
    for i, ok in enumerate(good):
        if ok and start is None:
            start = i
        if not ok and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, grid - 1))
    bad = np.flatnonzero(~good)
    escaped = [(float(probe[max(i - 1, 0)]), float(probe[min(i + 1, grid - 1)])) for i in bad]
    parts = [count_zeros(f, (probe[a], probe[b]), n0=max(16, b - a + 1), max_n=16 * grid)
             for a, b in runs if b - a >= 2]
    roots = np.concatenate([p.roots for p in parts]) if parts else np.zeros(0)
    merged = ZeroReport(
        [b for p in parts for b in p.brackets], roots, int(sum(p.count for p in parts)),
        all(p.certified for p in parts), [r for p in parts for r in p.possibly_multiple],
        [t for p in parts for t in p.touches], grid_size=int(sum(p.grid_size for p in parts)),
    )
    return CycleReport(float(epsilon), (lo, hi), merged, escaped)


def match_cycles(fixed_points: Sequence[float], predicted: Sequence[float], radius: float) -> list:
    """Pair each predicted zero with the fixed points within ``radius``.

    Returns (predicted, nearest fixed point or None, distance, exactly_one)."""
    fp = np.asarray(fixed_points, dtype=float)
    out = []
    for z in predicted:
        dist = np.abs(fp - z)
        near = int(np.count_nonzero(dist <= radius))
        if fp.size:
            i = int(np.argmin(dist))
            out.append((float(z), float(fp[i]), float(dist[i]), near == 1))
        else:
            out.append((float(z), None, math.inf, False))
    return out


# ---------------------------------------------------------------------------
# lower bounds for the Hilbert number


@dataclass(frozen=True)
class HilbertEstimate:
    m: int
    case: CaseTag
    reduced: int
    value: int
    note: str

    def to_json(self) -> dict:
        return {"m": self.m, "case": self.case.value, "reduced": self.reduced,
                "value": self.value, "note": self.note}


def hilbert_table(m: int, case, p_odd: bool, pq_positive: bool = False) -> HilbertEstimate:
    """Lower bound for the number of limit cycles of the x-equation.

    The reduced equation contributes 7m-3 / 4m+1 / 2m-1 (generic / π / 2π).
    For odd p the map x -> x^(1-p)/(1-p) is two-to-one, so every reduced cycle
    gives a pair; when p, q > 0, x ≡ 0 adds one more.
    """
    from .synthesis import z2_lower

    if m < 1:
        raise DomainError("m must be >= 1")
    case = CaseTag(case)
    base = z2_lower(m, case)
    value = 2 * base if p_odd else base
    notes = [f"reduced equation: {base}"]
    notes.append("odd p: each reduced cycle gives x and -x" if p_odd
                 else "even p: one x-cycle per reduced cycle")
    if pq_positive:
        value += 1
        notes.append("p, q > 0: the zero solution is one more cycle")
    return HilbertEstimate(m, case, base, value, "; ".join(notes))
