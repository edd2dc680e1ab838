import math

import numpy as np
import pytest

from abelcycles.domain import AbelEquation, CaseTag, DomainError
from abelcycles.melnikov import m1_combination, m2_direct
from abelcycles.synthesis import sample_equation
from abelcycles.validate import (
    Status,
    count_limit_cycles,
    displacement,
    flow_map,
    hilbert_table,
    match_cycles,
    melnikov_estimate,
    reduced_initial,
    return_map,
    unperturbed_x_power,
    write_csv,
    x_flow,
)

PI = math.pi


@pytest.mark.parametrize("pq,window", [((-1, 2), (0.3, 6.0)), ((3, 2), (-8.0, -2.3))])
def test_unperturbed_orbits_close(pq, window):
    eq = sample_equation(1, PI / 2, *pq, seed=0)
    d = displacement(eq, 0.0, np.linspace(*window, 100))
    assert np.max(np.abs(d)) < 1e-10


@pytest.mark.parametrize("p,q,x0", [(-1, 2, 1.3), (3, 2, 0.4), (2, 3, 0.3), (-2, 3, -2.5)])
def test_x_equation_unperturbed_closed_form(p, q, x0):
    th = np.linspace(0, 2 * PI, 9)
    xs = x_flow(AbelEquation.build(p, q, 1, PI / 2), 0.0, x0, th)
    assert np.max(np.abs(xs ** (1 - p) - unperturbed_x_power(th, x0, p))) < 1e-9


@pytest.mark.parametrize("p,q,x0", [(-1, 2, 1.3), (3, 2, 0.4), (-1, -2, 0.8)])
def test_x_flow_matches_reduced_flow(p, q, x0):
    eq = sample_equation(1, PI / 2, p, q, seed=4)
    xe = x_flow(eq, 1e-2, x0)
    ye = flow_map(eq, 1e-2, reduced_initial(x0, p)).rho_end
    assert reduced_initial(xe, p) == pytest.approx(ye, abs=1e-9)


def test_zone_split_is_harmless():
    eq = sample_equation(2, "2pi", -1, 2, seed=1)
    a = flow_map(eq, 1e-2, 1.0).rho_end
    b = flow_map(eq, 1e-2, 1.0, extra_breaks=[2.0]).rho_end
    assert abs(a - b) < 1e-11


def test_first_order_convergence():
    eq = sample_equation(1, PI / 2, -1, 2, seed=1)
    m1 = float(m1_combination(eq)(np.array([1.0]))[0])
    est = melnikov_estimate(eq, 1.0, m1_closed=m1)
    err = np.abs(est.ratios - m1)
    ratios = err[:-1] / err[1:]
    assert np.all((ratios >= 1.7) & (ratios <= 2.3)), ratios
    assert est.converged
    assert est.m2 == pytest.approx(float(m2_direct(eq, 1.0)[0]), rel=1e-2)
    with pytest.raises(DomainError):
        melnikov_estimate(eq, 1.0, eps_list=(1e-2, 5e-3))


def test_zero_equation_has_no_cycles():
    eq = AbelEquation.build(-1, 2, 1, PI / 2)
    rep = count_limit_cycles(eq, 1e-2, (0.3, 6.0), grid=32)
    assert rep.count == 0 and rep.zeros.certified


def test_escape_is_reported():
    eq = AbelEquation.build(-1, 2, 1, PI / 2, Q1=[[0, 0], [50, 0]])
    s = return_map(eq, 0.5, [0.05])[0]
    assert s.status is not Status.COMPLETED
    assert math.isnan(displacement(eq, 0.5, [0.05])[0])


def test_csv_layout():
    eq = sample_equation(1, PI / 2, -1, 2, seed=0)
    lines = write_csv(return_map(eq, 1e-3, [1.0, 2.0])).strip().splitlines()
    assert lines[0] == "epsilon,rho0,rho_end,displacement,status"
    assert len(lines) == 3 and lines[1].endswith(",completed")


def test_parallel_matches_serial():
    eq = sample_equation(1, PI / 2, -1, 2, seed=0)
    r = np.linspace(0.3, 6, 20)
    assert np.array_equal(displacement(eq, 1e-2, r), displacement(eq, 1e-2, r, jobs=2))


def test_match_cycles():
    out = match_cycles([1.0, 2.0, 2.001], [1.0005, 2.0, 5.0], 0.01)
    assert [o[3] for o in out] == [True, False, False]


def test_hilbert_examples():
    assert hilbert_table(1, CaseTag.GENERIC_LOW, p_odd=True).value == 8
    assert hilbert_table(1, CaseTag.TWO_PI, p_odd=True, pq_positive=True).value == 3
    assert hilbert_table(2, CaseTag.PI, p_odd=False).value == 9
    with pytest.raises(DomainError):
        hilbert_table(0, CaseTag.PI, p_odd=False)
