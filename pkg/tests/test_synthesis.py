import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abelcycles.domain import CaseTag, DomainError, case_of
from abelcycles.melnikov import m1_combination, m2_direct, q1_double_integral
from abelcycles.synthesis import (
    RealizationTarget,
    m1_layout,
    m1_to_equation,
    realize_table1,
    sample_center_equation,
    z1,
    z2_lower,
    z2_upper,
)

PI = math.pi
CASES = [c.value for c in CaseTag]


def test_counts():
    assert [z1(2, c) for c in CaseTag] == [8, 8, 5, 3]
    assert [z2_lower(2, c) for c in CaseTag] == [11, 11, 9, 3]
    assert z2_upper(2, CaseTag.GENERIC_LOW) == 14 and z2_upper(2, CaseTag.PI) == 9


def test_target_validation():
    with pytest.raises(DomainError):
        RealizationTarget(tuple(m1_layout(1, PI / 2, 1.5)), [1.0, 2.0])
    with pytest.raises(DomainError):
        RealizationTarget(tuple(m1_layout(1, 2 * PI, 1.5)), [1.0, 1.0])


@settings(max_examples=100)
@given(st.integers(0, 2**31 - 1), st.sampled_from([PI / 2, 4.0, PI, 2 * PI]), st.integers(1, 3),
       st.sampled_from([(-1, 2), (3, 2), (-1, -2)]))
def test_m1_round_trip(seed, t1, m, pq):
    layout = m1_layout(m, t1, 1.5)
    v = np.random.default_rng(seed).normal(size=len(layout))
    eq = m1_to_equation(v, t1, *pq, m=m)
    got = m1_combination(eq)
    back = np.zeros(len(layout))
    pos = {(t.kind, t.k, t.E): i for i, t in enumerate(layout)}
    for c, t in got.terms:
        back[pos[(t.kind, t.k, t.E)]] += c
    assert np.allclose(back, v, atol=1e-12 * (1 + np.max(np.abs(v))))


@pytest.mark.parametrize("case", CASES)
@pytest.mark.parametrize("order", [1, 2])
def test_realizations_m1(case, order):
    r = realize_table1(1, case, order=order, strict=False)
    assert r.ok, (r.achieved, r.expected, r.node_error)
    assert r.achieved == (z1(1, CaseTag(case)) if order == 1 else z2_lower(1, CaseTag(case)))
    assert r.to_json()["ok"]


@pytest.mark.parametrize("t1", [PI / 3, 5 * PI / 4, PI, 2 * PI])
def test_center_conditions(t1):
    eq = sample_center_equation(2, t1, -1, 2, seed=7)
    rho = np.linspace(0.3, 5, 9)
    assert np.max(np.abs(m1_combination(eq)(rho))) < 1e-12
    assert np.max(np.abs(q1_double_integral(eq, rho))) < 1e-10
    assert np.all(np.isfinite(m2_direct(eq, rho)))
    assert case_of(eq.theta1) is case_of(t1)
