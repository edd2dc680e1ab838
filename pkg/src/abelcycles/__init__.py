"""Numerical laboratory for limit cycles of piecewise-smooth generalized Abel equations."""
from .domain import (
    AbelEquation,
    AnnulusDomain,
    CaseTag,
    DomainError,
    NumericalError,
    PiecewiseTrigPoly,
    alpha_of,
    annulus_of,
    center_conditions,
    sine_terms_match,
    parse_angle,
)
from .quadrature import BasisTerm, Kind, LinearCombination, eval_basis
from .melnikov import (
    MelnikovResult,
    StructuralError,
    eval_combination,
    m1_combination,
    m2_direct,
    m2_integrand,
    m2_structured,
    s1_hat,
)
from .chebyshev import (
    cheb_bound_check,
    continuous_wronskian,
    count_zeros,
    discrete_wronskian,
    reference_families,
    verify_ect,
)
from .synthesis import (
    m1_to_equation,
    realize_table1,
    sample_center_equation,
    sample_equation,
)
from .validate import (
    count_limit_cycles,
    flow_map,
    hilbert_table,
    melnikov_estimate,
    return_map,
)

__version__ = "0.1.0"
