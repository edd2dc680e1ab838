import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from abelcycles.domain import (
    AbelEquation,
    CaseTag,
    DomainError,
    PiecewiseTrigPoly,
    alpha_of,
    annulus_of,
    case_of,
    center_conditions,
    parse_angle,
    real_normalized_scale,
)


def test_alpha_examples():
    assert alpha_of(3, 2) == Fraction(1, 2)
    assert alpha_of(2, 3) == -1
    assert alpha_of(-1, 2) == Fraction(3, 2)


@pytest.mark.parametrize("p,q", [(0, 2), (1, 3), (2, 0), (3, 1), (3, 3), (2, 2), (-1, -1)])
def test_alpha_rejects(p, q):
    with pytest.raises(DomainError):
        alpha_of(p, q)


@given(st.integers(-8, 8), st.integers(-8, 8))
def test_alpha_never_nonnegative_integer(p, q):
    try:
        a = alpha_of(p, q)
    except DomainError:
        return
    assert not (a.denominator == 1 and a >= 0)


def test_annulus_examples():
    a3 = annulus_of(3)
    assert a3.y_intervals == ((-math.inf, -2.0),)
    assert a3.hp == pytest.approx(0.5)
    assert a3.x_intervals == ((-0.5, 0.0), (0.0, 0.5))
    assert annulus_of(2).y_intervals == ((-math.inf, -2.0), (0.0, math.inf))
    assert annulus_of(-1).y_intervals == ((0.0, math.inf),)


@given(st.sampled_from([-4, -3, -2, -1, 2, 3, 4, 5]), st.floats(0.0, 1.0))
def test_base_sign_constant_on_annulus(p, u):
    th = np.linspace(0, 2 * math.pi, 2001)
    for lo, hi in annulus_of(p).y_intervals:
        lo = max(lo, -50.0)
        hi = min(hi, 50.0)
        rho = lo + (hi - lo) * (0.001 + 0.998 * u)
        s = np.sign(1 + rho - np.cos(th))
        assert np.all(s == s[0]) and s[0] != 0


def test_scale_examples():
    assert real_normalized_scale(3, Fraction(1, 2)) == pytest.approx(math.sqrt(2))
    assert real_normalized_scale(-1, Fraction(3, 2)) == pytest.approx(2**1.5)
    assert real_normalized_scale(2, -1) == 1.0


def test_parse_angle_literals():
    assert parse_angle("pi") == math.pi
    assert parse_angle("2pi") == 2 * math.pi
    assert parse_angle("5pi/4") == pytest.approx(5 * math.pi / 4)
    assert parse_angle("pi/2") == pytest.approx(math.pi / 2)
    assert parse_angle(1.25) == 1.25
    with pytest.raises(DomainError):
        parse_angle("two pi")


def test_case_of():
    assert case_of(math.pi / 3) is CaseTag.GENERIC_LOW
    assert case_of(5 * math.pi / 4) is CaseTag.GENERIC_HIGH
    assert case_of(math.pi) is CaseTag.PI
    assert case_of(2 * math.pi) is CaseTag.TWO_PI
    with pytest.raises(DomainError):
        case_of(7.0)


tables = st.lists(st.floats(-3, 3), min_size=6, max_size=6).map(lambda v: np.array(v).reshape(3, 2))


@given(tables, tables, st.floats(0.3, 6.0))
def test_p10_matches_quadrature(plus, minus, t1):
    poly = PiecewiseTrigPoly(2, t1, plus, minus)
    brk = [0.0, t1, 2 * math.pi]
    x, w = np.polynomial.legendre.leggauss(64)
    ref = sum(0.5 * (b - a) * w @ poly(0.5 * (a + b) + 0.5 * (b - a) * x)
              for a, b in zip(brk[:-1], brk[1:]))
    assert poly.full_integral() == pytest.approx(ref, abs=1e-12)


@given(tables)
def test_smooth_case_uses_plus(plus):
    poly = PiecewiseTrigPoly(2, 2 * math.pi, plus, None)
    th = np.linspace(0, 2 * math.pi, 97)
    k = np.arange(3)
    ref = np.sin(np.outer(th, k)) @ poly.plus[:, 0] + np.cos(np.outer(th, k)) @ poly.plus[:, 1]
    assert np.allclose(poly(th), ref, atol=1e-14)


def test_two_pi_rejects_distinct_zones():
    with pytest.raises(DomainError):
        PiecewiseTrigPoly(1, 2 * math.pi, [[0, 1], [0, 0]], [[0, 2], [0, 0]])


def test_zone_selection_at_switch():
    poly = PiecewiseTrigPoly(0, 1.0, [[0, 1.0]], [[0, 2.0]])
    assert poly(np.array([0.999]))[0] == 1.0
    assert poly(np.array([1.0]))[0] == 2.0


def test_center_condition_examples():
    eq = AbelEquation.build(-1, 2, 1, math.pi / 2)
    assert center_conditions(eq)[0]
    eq = AbelEquation.build(-1, 2, 1, math.pi / 2, Q1={"plus": [[0, 0], [0, 1]], "minus": [[0, 0], [0, 0]]})
    ok, why = center_conditions(eq)
    assert not ok and "Q1 cos1 plus != 0" in why
    eq = AbelEquation.build(-1, 2, 1, "pi", Q1={"plus": [[0, 1], [0.4, 0]], "minus": [[0, -1], [0.4, 0]]})
    assert center_conditions(eq)[0]


def test_json_round_trip():
    eq = AbelEquation.build(3, 2, 2, "pi", P1=np.arange(6.0).reshape(3, 2), Q1={"plus": np.ones((3, 2)), "minus": -np.ones((3, 2))})
    back = AbelEquation.from_json(eq.to_json())
    assert back.to_json() == eq.to_json()
    with pytest.raises(DomainError):
        AbelEquation.from_json({"p": 3, "q": 2})
