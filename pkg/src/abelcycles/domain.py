"""Equations, exponent arithmetic and admissible initial-value domains.

The perturbed generalized Abel equation

    dx/dθ = (sin θ + ε P1 + ε² P2) x^p + (ε Q1 + ε² Q2) x^q

is handled through the reduced variable y = x^(1-p) / (1-p), in which the
unperturbed orbits are y0(θ, ρ) = ρ + 1 - cos θ.  Throughout the package the
power y^α is taken with a positive base, |y|^α, and the coefficients of Q1, Q2
are scaled by the positive factor |1-p|^α.  This is exactly the reduced
equation of the x > 0 branch; it differs from a literal complex-valued reading
by one common constant factor, which leaves zero sets unchanged.
"""
from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * math.pi
COEF_TOL = 1e-12
ANGLE_TOL = 1e-12


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (non-convergence, singular system, ...)."""


class CaseTag(str, enum.Enum):
    GENERIC_LOW = "theta1-in-(0,pi)"
    GENERIC_HIGH = "theta1-in-(pi,2pi)"
    PI = "theta1=pi"
    TWO_PI = "theta1=2pi"

    @property
    def is_generic(self) -> bool:
        return self in (CaseTag.GENERIC_LOW, CaseTag.GENERIC_HIGH)


def case_of(theta1: float) -> CaseTag:
    if not 0.0 < theta1 <= TWO_PI + ANGLE_TOL:
        raise DomainError(f"theta1={theta1!r} outside (0, 2pi]")
    if abs(theta1 - math.pi) <= ANGLE_TOL:
        return CaseTag.PI
    if abs(theta1 - TWO_PI) <= ANGLE_TOL:
        return CaseTag.TWO_PI
    return CaseTag.GENERIC_LOW if theta1 < math.pi else CaseTag.GENERIC_HIGH


_ANGLE_RE = re.compile(
    r"^\s*(?P<num>[0-9]*\.?[0-9]*)\s*\*?\s*pi\s*(?:/\s*(?P<den>[0-9]*\.?[0-9]+))?\s*$"
)


def parse_angle(value) -> float:
    """Parse radians given as a number or as a pi-literal ("pi", "2pi", "5pi/4")."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, str):
        raise DomainError(f"cannot parse angle {value!r}")
    m = _ANGLE_RE.match(value.lower())
    if m is None:
        try:
            return float(value)
        except ValueError:
            raise DomainError(f"cannot parse angle {value!r}") from None
    num = float(m.group("num")) if m.group("num") else 1.0
    den = float(m.group("den")) if m.group("den") else 1.0
    angle = num * math.pi / den
    # snap to the critical values exactly
    for special in (math.pi, TWO_PI):
        if abs(angle - special) <= ANGLE_TOL:
            return special
    return angle


# ---------------------------------------------------------------------------
# exponents


def alpha_of(p: int, q: int) -> Fraction:
    """Return α = (q - p)/(1 - p) after checking the admissibility of (p, q)."""
    if int(p) != p or int(q) != q:
        raise DomainError("p and q must be integers")
    p, q = int(p), int(q)
    if p in (0, 1) or q in (0, 1):
        raise DomainError(f"p and q must avoid {{0, 1}}, got (p, q)=({p}, {q})")
    ratio = Fraction(q - 1, p - 1)
    if ratio.denominator == 1 and ratio <= 1:
        raise DomainError(
            f"(q-1)/(p-1)={ratio} is an integer <= 1: alpha would be a non-negative integer"
        )
    return Fraction(q - p, 1 - p)


def real_normalized_scale(p: int, alpha) -> float:
    """|1 - p|^α, the positive stand-in for (1 - p)^α."""
    return float(abs(1 - p)) ** float(alpha)


@dataclass(frozen=True)
class ExponentPair:
    p: int
    q: int
    alpha: Fraction = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "alpha", alpha_of(self.p, self.q))

    @property
    def scale(self) -> float:
        return real_normalized_scale(self.p, self.alpha)


# ---------------------------------------------------------------------------
# annuli


@dataclass(frozen=True)
class AnnulusDomain:
    """Periodic annulus in the original variable (x) and the reduced one (ρ)."""

    p: int
    x_intervals: tuple
    y_intervals: tuple
    hp: float | None

    def contains(self, rho: float) -> bool:
        return any(lo < rho < hi for lo, hi in self.y_intervals)

    def branch_of(self, rho: float) -> tuple:
        for iv in self.y_intervals:
            if iv[0] < rho < iv[1]:
                return iv
        raise DomainError(f"rho={rho!r} is outside the annulus {self.y_intervals}")


def _hp(p: int) -> float | None:
    base = 2.0 * p - 2.0
    expo = Fraction(1, 1 - p)
    if base > 0:
        return base ** float(expo)
    if expo.denominator % 2 == 1:  # odd root of a negative number
        return -((-base) ** float(expo))
    return None


def annulus_of(p: int) -> AnnulusDomain:
    if p in (0, 1):
        raise DomainError("p must avoid {0, 1}")
    inf = math.inf
    h = _hp(p)
    odd = p % 2 != 0
    if p > 1 and odd:
        xs = ((-h, 0.0), (0.0, h))
        ys = ((-inf, -2.0),)
    elif p > 1:
        xs = ((-inf, 0.0), (0.0, h))
        ys = ((-inf, -2.0), (0.0, inf))
    elif odd:
        xs = ((-inf, 0.0), (0.0, inf))
        ys = ((0.0, inf),)
    else:
        xs = ((-inf, h), (0.0, inf))
        ys = ((-inf, -2.0), (0.0, inf))
    return AnnulusDomain(p=p, x_intervals=xs, y_intervals=ys, hp=h)


def base_sign(rho: float) -> int:
    """Sign of 1 + ρ - cos θ, constant in θ on the annulus branches."""
    if rho > 0:
        return 1
    if rho < -2:
        return -1
    raise DomainError(f"1 + rho - cos(theta) changes sign for rho={rho!r}")


# ---------------------------------------------------------------------------
# piecewise trigonometric polynomials


def _as_table(coefs, m: int) -> np.ndarray:
    arr = np.zeros((m + 1, 2))
    if coefs is not None:
        src = np.asarray(coefs, dtype=float).reshape(-1, 2)
        if src.shape[0] > m + 1:
            raise DomainError(f"coefficient table longer than m+1={m + 1}")
        arr[: src.shape[0]] = src
    if abs(arr[0, 0]) > 0:
        # sin(0θ) vanishes; keep the slot but never let it carry weight
        arr[0, 0] = 0.0
    arr.setflags(write=False)
    return arr


def _trig_eval(table: np.ndarray, theta: np.ndarray) -> np.ndarray:
    k = np.arange(table.shape[0])
    kt = np.multiply.outer(theta, k)
    return np.sin(kt) @ table[:, 0] + np.cos(kt) @ table[:, 1]


def _trig_deriv(table: np.ndarray, theta: np.ndarray) -> np.ndarray:
    k = np.arange(table.shape[0])
    kt = np.multiply.outer(theta, k)
    return np.cos(kt) @ (k * table[:, 0]) - np.sin(kt) @ (k * table[:, 1])


def _trig_primitive(table: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """A primitive b0 θ + Σ (-a_k cos kθ + b_k sin kθ)/k."""
    k = np.arange(1, table.shape[0])
    kt = np.multiply.outer(theta, k)
    out = table[0, 1] * theta
    if k.size:
        out = out + np.cos(kt) @ (-table[1:, 0] / k) + np.sin(kt) @ (table[1:, 1] / k)
    return out


@dataclass(frozen=True)
class PiecewiseTrigPoly:
    """Σ_{k=0}^m (a_k sin kθ + b_k cos kθ) with one coefficient table per zone.

    ``plus`` is used on [0, θ1) and ``minus`` on [θ1, 2π]; rows are (a_k, b_k).
    """

    m: int
    theta1: float
    plus: np.ndarray
    minus: np.ndarray

    def __post_init__(self):
        if self.m < 0:
            raise DomainError("degree must be non-negative")
        case_of(self.theta1)
        object.__setattr__(self, "plus", _as_table(self.plus, self.m))
        minus = self.plus if self.minus is None else self.minus
        object.__setattr__(self, "minus", _as_table(minus, self.m))
        if case_of(self.theta1) is CaseTag.TWO_PI and not np.allclose(
            self.plus, self.minus, rtol=0.0, atol=COEF_TOL
        ):
            raise DomainError("theta1 = 2pi requires identical zones")

    @classmethod
    def zero(cls, m: int, theta1: float) -> "PiecewiseTrigPoly":
        return cls(m, theta1, np.zeros((m + 1, 2)), np.zeros((m + 1, 2)))

    @property
    def is_zero(self) -> bool:
        return not (np.any(np.abs(self.plus) > COEF_TOL) or np.any(np.abs(self.minus) > COEF_TOL))

    def scaled(self, factor: float) -> "PiecewiseTrigPoly":
        return PiecewiseTrigPoly(self.m, self.theta1, self.plus * factor, self.minus * factor)

    def _zones(self, theta):
        theta = np.asarray(theta, dtype=float)
        return theta, theta < self.theta1

    def __call__(self, theta):
        theta, upper = self._zones(theta)
        return np.where(upper, _trig_eval(self.plus, theta), _trig_eval(self.minus, theta))

    def derivative(self, theta):
        theta, upper = self._zones(theta)
        return np.where(upper, _trig_deriv(self.plus, theta), _trig_deriv(self.minus, theta))

    def primitive(self, theta):
        """∫_0^θ of the polynomial, exact."""
        theta, upper = self._zones(theta)
        t1 = np.asarray(self.theta1)
        left = _trig_primitive(self.plus, theta) - _trig_primitive(self.plus, np.zeros(()))
        at_switch = _trig_primitive(self.plus, t1) - _trig_primitive(self.plus, np.zeros(()))
        right = at_switch + _trig_primitive(self.minus, theta) - _trig_primitive(self.minus, t1)
        return np.where(upper, left, right)

    def full_integral(self) -> float:
        return float(self.primitive(TWO_PI))

    def to_json(self) -> dict:
        out = {"plus": self.plus.tolist()}
        if case_of(self.theta1) is not CaseTag.TWO_PI:
            out["minus"] = self.minus.tolist()
        return out


# ---------------------------------------------------------------------------
# the equation


@dataclass(frozen=True)
class AbelEquation:
    exps: ExponentPair
    m: int
    theta1: float
    P1: PiecewiseTrigPoly
    P2: PiecewiseTrigPoly
    Q1: PiecewiseTrigPoly
    Q2: PiecewiseTrigPoly

    def __post_init__(self):
        for name in ("P1", "P2", "Q1", "Q2"):
            poly = getattr(self, name)
            if poly.m != self.m or abs(poly.theta1 - self.theta1) > ANGLE_TOL:
                raise DomainError(f"{name} must share m={self.m} and theta1={self.theta1}")

    @classmethod
    def build(cls, p, q, m, theta1, P1=None, P2=None, Q1=None, Q2=None) -> "AbelEquation":
        """Convenience constructor from raw coefficient tables (or polys)."""
        theta1 = parse_angle(theta1)

        def poly(src):
            if src is None:
                return PiecewiseTrigPoly.zero(m, theta1)
            if isinstance(src, PiecewiseTrigPoly):
                return src
            if isinstance(src, dict):
                return PiecewiseTrigPoly(m, theta1, src.get("plus"), src.get("minus"))
            return PiecewiseTrigPoly(m, theta1, src, None)

        return cls(ExponentPair(p, q), m, theta1, poly(P1), poly(P2), poly(Q1), poly(Q2))

    @property
    def alpha(self) -> Fraction:
        return self.exps.alpha

    @property
    def scale(self) -> float:
        return self.exps.scale

    @property
    def case(self) -> CaseTag:
        return case_of(self.theta1)

    @property
    def Q1t(self) -> PiecewiseTrigPoly:
        return self.Q1.scaled(self.scale)

    @property
    def Q2t(self) -> PiecewiseTrigPoly:
        return self.Q2.scaled(self.scale)

    @property
    def p10(self) -> float:
        return self.P1.full_integral()

    @property
    def p20(self) -> float:
        return self.P2.full_integral()

    def annulus(self) -> AnnulusDomain:
        return annulus_of(self.exps.p)

    def replace(self, **polys) -> "AbelEquation":
        kw = {n: getattr(self, n) for n in ("P1", "P2", "Q1", "Q2")}
        kw.update(polys)
        return AbelEquation(self.exps, self.m, self.theta1, **kw)

    def to_json(self) -> dict:
        out = {"p": self.exps.p, "q": self.exps.q, "m": self.m, "theta1": _angle_json(self.theta1)}
        for name in ("P1", "P2", "Q1", "Q2"):
            out[name] = getattr(self, name).to_json()
        return out

    @classmethod
    def from_json(cls, data: dict) -> "AbelEquation":
        try:
            p, q, m = int(data["p"]), int(data["q"]), int(data["m"])
            theta1 = data["theta1"]
        except KeyError as exc:
            raise DomainError(f"equation definition lacks field {exc.args[0]!r}") from None
        return cls.build(p, q, m, theta1, *(data.get(n) for n in ("P1", "P2", "Q1", "Q2")))


def _angle_json(theta: float):
    if abs(theta - math.pi) <= ANGLE_TOL:
        return "pi"
    if abs(theta - TWO_PI) <= ANGLE_TOL:
        return "2pi"
    return theta


def center_conditions(eq: AbelEquation, tol: float = COEF_TOL) -> tuple[bool, list[str]]:
    """Check the coefficient constraints equivalent to M1 ≡ 0.

    Returns ``(ok, violations)``; each violation names the offending
    coefficient of the scaled Q1 (sin / cos part, harmonic k, zone).
    """
    bad = []
    if abs(eq.p10) > tol:
        bad.append(f"p10={eq.p10:.3g} != 0")
    q = eq.Q1t
    c_plus, d_plus = q.plus[:, 0], q.plus[:, 1]
    c_minus, d_minus = q.minus[:, 0], q.minus[:, 1]
    for k in range(eq.m + 1):
        if k >= 1 and abs(c_plus[k] - c_minus[k]) > tol:
            bad.append(f"Q1 sin{k}: plus != minus")
        if eq.case is CaseTag.PI:
            if abs(d_plus[k] + d_minus[k]) > tol:
                bad.append(f"Q1 cos{k}: plus != -minus")
        else:
            if abs(d_plus[k]) > tol:
                bad.append(f"Q1 cos{k} plus != 0")
            if abs(d_minus[k]) > tol:
                bad.append(f"Q1 cos{k} minus != 0")
    return (not bad), bad


def sine_terms_match(eq: AbelEquation, tol: float = COEF_TOL) -> bool:
    """P1 sine coefficients agree across zones, k = 1..m (needed for second order at θ1 = π)."""
    return bool(np.all(np.abs(eq.P1.plus[1:, 0] - eq.P1.minus[1:, 0]) <= tol))


def as_float_array(values: Sequence[float] | float) -> np.ndarray:
    return np.atleast_1d(np.asarray(values, dtype=float))
