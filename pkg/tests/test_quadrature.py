import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from abelcycles.domain import DomainError
from abelcycles.quadrature import (
    CONST,
    BasisTerm,
    C,
    D,
    ExtendedBasis,
    Kind,
    LinearCombination,
    QuadratureDomainError,
    S,
    basis_matrix,
    eval_basis,
    eval_basis_drho,
    gk_integrate,
    verify_interval_identities,
)

PI = math.pi
TWO_PI = 2 * math.pi


def mp_kernel(kind, k, E, beta, rho, dps=30):
    """Independent oracle: mpmath tanh-sinh on the defining integral."""
    with mpmath.workdps(dps):
        def f(t):
            base = abs(1 + mpmath.mpf(rho) - mpmath.cos(t)) ** beta
            if kind == "C":
                return mpmath.cos(k * t) * base
            if kind == "S":
                return mpmath.sin(k * t) * base
            return t * mpmath.sin(k * t) * base
        pts = sorted({E[0], E[1]} | {x for x in (PI,) if E[0] < x < E[1]})
        return float(mpmath.quad(f, pts))


def test_c0_closed_form_and_riemann_sum():
    val = eval_basis(C(0, (0, TWO_PI), -1), 1.0)
    assert val == pytest.approx(2 * PI / math.sqrt(3), rel=1e-12)
    # brute force: the periodic trapezoid rule is spectrally accurate here
    th = np.linspace(0, TWO_PI, 10**6, endpoint=False)
    assert val == pytest.approx(np.mean(1 / (2 - np.cos(th))) * TWO_PI, rel=1e-12)
    assert val == pytest.approx(3.62759872847, abs=1e-10)


def test_trivial_examples():
    assert abs(eval_basis(S(1, (0, TWO_PI), -0.5), 1.0)) < 1e-12
    assert eval_basis_drho(C(0, (0, TWO_PI), -1), 1.0, 1) == pytest.approx(-4 * PI / 3**1.5, rel=1e-10)
    assert eval_basis_drho(C(0, (0, TWO_PI), -1), 1.0, 1) == pytest.approx(-2.41839915231, abs=1e-10)
    assert eval_basis_drho(BasisTerm(Kind.POW_RHO, beta=0.5), 4.0, 1) == pytest.approx(0.25)
    assert eval_basis(CONST, 3.0) == 1.0
    assert eval_basis(BasisTerm(Kind.POW_RHO2, beta=1.5), 2.0) == pytest.approx(8.0)


def test_d_needs_k_positive():
    with pytest.raises(DomainError):
        D(0, (0, PI), -0.5)
    with pytest.raises(DomainError):
        C(1, (0, PI), 2.0)


@pytest.mark.parametrize("kind,k,E,beta,rho", [
    ("C", 0, (0, PI / 2), -0.5, 0.3),
    ("C", 3, (PI / 3, PI), 1.5, 2.0),
    ("S", 2, (0, 3 * PI / 4), -0.5, 0.05),
    ("D", 1, (PI / 2, PI), -0.5, 1.0),
    ("D", 3, (0, 5 * PI / 4), 1.5, -2.5),
    ("S", 1, (PI, TWO_PI), -1.5, -4.0),
    ("C", 2, (0, TWO_PI), 0.5, 7.0),
])
def test_against_mpmath(kind, k, E, beta, rho):
    ours = eval_basis(BasisTerm(Kind(kind), k, E, beta), rho)
    ref = mp_kernel(kind, k, E, beta, rho)
    assert ours == pytest.approx(ref, rel=1e-10, abs=1e-11)


def test_sign_change_rejected():
    with pytest.raises(QuadratureDomainError):
        eval_basis(C(0, (0, PI), -0.5), -1.0)
    # on E = [0, pi/3] the base stays positive for rho slightly below 0
    assert eval_basis(C(0, (PI / 2, PI), -0.5), -0.5) > 0


def test_near_boundary_flag():
    with pytest.warns(UserWarning, match="annulus boundary"):
        eval_basis(C(0, (0, PI), 1.5), 1e-8)


kinds = st.sampled_from(["C", "S", "D"])
betas = st.sampled_from([-1.5, -0.5, 0.5, 1.5, 2.5, -0.25])
rhos = st.one_of(st.floats(0.05, 8.0), st.floats(-10.0, -2.05))
intervals = st.sampled_from([(0, PI), (0, PI / 3), (PI / 2, PI), (0, TWO_PI), (PI / 4, 5 * PI / 4)])


@given(kinds, st.integers(1, 5), intervals, betas, rhos)
def test_derivative_recurrence_vs_finite_differences(kind, k, E, beta, rho):
    t = BasisTerm(Kind(kind), k, E, beta)
    h = 1e-5
    kw = dict(epsabs=1e-15, epsrel=1e-14)
    fd = (eval_basis(t, rho + h, **kw) - eval_basis(t, rho - h, **kw)) / (2 * h)
    d1 = eval_basis_drho(t, rho, 1)
    assert abs(d1 - fd) <= 1e-6 * max(abs(d1), 1e-3)


@given(st.integers(1, 6), betas, rhos)
def test_full_period_sine_vanishes(k, beta, rho):
    scale = abs(eval_basis(C(0, (0, TWO_PI), beta), rho))
    assert abs(eval_basis(S(k, (0, TWO_PI), beta), rho)) <= 1e-11 * max(1.0, scale)


def test_c0_decreasing_for_negative_beta():
    grid = np.linspace(0.01, 20, 200)
    for beta in (-0.5, -1.5):
        vals = basis_matrix([C(0, (0, PI), beta)], grid)[:, 0]
        assert np.all(np.diff(vals) < 0)


@given(st.integers(0, 5), st.sampled_from([PI / 3, PI / 2, 2 * PI / 3, PI, 5 * PI / 4, 3 * PI / 2, TWO_PI]),
       st.sampled_from([-0.5, 1.5]), st.sampled_from([-5.0, -2.5, 0.3, 1.0, 5.0]))
def test_interval_identities(k, t1, beta, rho):
    res = verify_interval_identities(k, t1, beta, rho)
    assert res and max(res.values()) < 1e-9


def test_interval_identity_examples():
    assert max(verify_interval_identities(1, PI / 2, -0.5, 1.0).values()) < 1e-9
    r = verify_interval_identities(2, PI, -0.5, 0.5)
    assert max(r.values()) < 1e-9
    assert eval_basis(C(2, (PI, PI), -0.5), 0.5) == 0.0
    assert max(verify_interval_identities(1, 5 * PI / 4, -0.5, 1.0).values()) < 1e-9


def test_gk_integrate_polynomial_and_vector():
    val, err = gk_integrate(lambda x: np.stack([x**5, np.exp(x)], axis=1), 0.0, 2.0)
    assert val[0] == pytest.approx(64 / 6, rel=1e-14)
    assert val[1] == pytest.approx(math.e**2 - 1, rel=1e-14)


def test_linear_combination_json_and_eval():
    lc = LinearCombination(((2.0, CONST), (-1.0, C(1, (0, PI), -0.5))), (0.0, math.inf))
    back = LinearCombination.from_json(lc.to_json())
    rho = np.array([0.5, 2.0])
    assert np.allclose(back(rho), lc(rho))
    assert np.allclose(lc(rho), 2 - basis_matrix([C(1, (0, PI), -0.5)], rho)[:, 0])
    assert LinearCombination((), (0.0, math.inf))(rho).tolist() == [0.0, 0.0]


def test_extended_basis_matches_mpmath():
    terms = [CONST, C(0, (0, PI / 2), -0.5), S(2, (0, PI / 2), -0.5), D(1, (PI / 2, PI), -0.5),
             BasisTerm(Kind.POW_RHO, beta=-0.5)]
    eb = ExtendedBasis(terms, (0.3, 6.0), dps=40)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        row = eb.row(0.7)
    with mpmath.workdps(40):
        ref = mpmath.quad(lambda t: mpmath.sin(2 * t) / mpmath.sqrt(1 + mpmath.mpf(0.7) - mpmath.cos(t)),
                          [0, mpmath.mpf(PI / 4), mpmath.mpf(PI / 2)])
        assert abs(row[2] - ref) < mpmath.mpf(10) ** -35
    assert float(row[0]) == 1.0
    assert float(row[4]) == pytest.approx(0.7**-0.5, rel=1e-15)
    assert float(row[1]) == pytest.approx(eval_basis(terms[1], 0.7), rel=1e-11)
    with pytest.raises(QuadratureDomainError):
        eb.row(7.0)
