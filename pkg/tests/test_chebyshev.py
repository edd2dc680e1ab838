import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abelcycles.chebyshev import (
    cheb_bound_check,
    continuous_wronskian,
    cos_sine_family,
    count_zeros,
    discrete_wronskian,
    mixed_trig_family,
    power_family,
    theta_sine_family,
    trig_family,
    two_interval_family,
    verify_ect,
)
from abelcycles.domain import DomainError


def test_small_wronskians_closed_form():
    # W(1, cos) = -sin, W(1, cos, sin) = 1
    fam = cos_sine_family(1)
    for t in (0.3, 1.1, 2.9):
        assert continuous_wronskian(fam, t, 2) == pytest.approx(-math.sin(t), rel=1e-12)
        assert abs(continuous_wronskian(fam, t, 3)) == pytest.approx(1.0, rel=1e-10)


def test_discrete_wronskian_is_determinant():
    fam = cos_sine_family(1)
    x = [0.2, 1.0, 2.5]
    M = np.array([[1.0, math.cos(t), math.sin(t)] for t in x])
    assert discrete_wronskian(fam, x) == pytest.approx(np.linalg.det(M), rel=1e-12)


def test_theta_sine_is_ect():
    r = verify_ect(theta_sine_family(1), n_grid=200)
    assert r.is_ect and r.discrete_ok
    assert len(r.to_json()["sizes"]) == 4


def test_negative_control_fails():
    # (s1, 1, c1): the 2x2 leading Wronskian -cos changes sign at pi/2
    r = verify_ect(trig_family([("s", 1), ("1",), ("c", 1)]), n_grid=200)
    assert not r.is_ect
    assert r.sign_constant[1] is False


def test_mixed_family_ordering():
    fam = mixed_trig_family(1, 2, 0)
    assert fam.size == 6
    with pytest.raises(DomainError):
        mixed_trig_family(2, 2, 0)


def test_kernel_family_small_ect():
    r = verify_ect(two_interval_family(1, math.pi / 2, -0.5), n_grid=60, discrete_tuples=3)
    assert r.is_ect


def test_power_family_layout():
    fam = power_family(1, 1.5, "negative")
    assert fam.size == 6 and fam.interval == (-math.inf, -2.0)


def test_bound_check_mixed():
    bc = cheb_bound_check(mixed_trig_family(1, 2, 0), trials=200, seed=1)
    assert bc.passed and bc.bound == 5 and bc.max_zeros == 5
    assert bc.to_json()["counterexample"] is None


def test_bound_check_finds_counterexample_for_non_ect():
    # (1, c2) has 2 zeros on (0, pi) for most combinations but N-1 = 1
    bc = cheb_bound_check(trig_family([("1",), ("c", 2)]), trials=50, seed=0)
    assert not bc.passed and bc.counterexample is not None


def test_count_zeros_simple():
    rep = count_zeros(np.sin, (0.5, 10.0))
    assert rep.count == 3 and rep.certified
    assert np.allclose(rep.roots, [math.pi, 2 * math.pi, 3 * math.pi], atol=1e-10)


def test_count_zeros_triple_root_flagged():
    rep = count_zeros(lambda x: (x - 0.3) ** 3 * (x + 2), (-1.0, 1.0))
    assert rep.count == 1
    assert len(rep.possibly_multiple) == 1 and rep.simple_count == 0


def test_count_zeros_double_root_is_touch_or_flag():
    rep = count_zeros(lambda x: (x - 0.3) ** 2 - 1e-20, (-1.0, 1.0))
    assert rep.simple_count == 0


@settings(max_examples=40)
@given(st.lists(st.floats(-0.95, 0.95), min_size=1, max_size=5, unique=True))
def test_count_zeros_recovers_separated_simple_roots(roots):
    roots = sorted(roots)
    if len(roots) > 1 and min(np.diff(roots)) < 0.05:
        return
    f = lambda x: np.prod([np.asarray(x) - r for r in roots], axis=0)
    rep = count_zeros(f, (-1.0, 1.0))
    assert rep.count == len(roots) and rep.simple_count == len(roots)
    assert np.allclose(np.sort(rep.roots), roots, atol=1e-9)


@settings(max_examples=20)
@given(st.integers(0, 2**31 - 1))
def test_cos_sine_combinations_respect_bound(seed):
    # any combination of (1, c1, c2, s2, s1) has at most 4 zeros in (0, pi)
    fam = cos_sine_family(2)
    c = np.random.default_rng(seed).normal(size=fam.size)
    rep = count_zeros(lambda t: fam.values(t) @ c, (1e-6, math.pi - 1e-6))
    assert rep.simple_count <= fam.size - 1
