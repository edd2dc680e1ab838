import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from abelcycles.estimators import KernelBasisTransformer, StructuredM2Regressor
from abelcycles.melnikov import m2_basis, m2_direct
from abelcycles.quadrature import CONST, C
from abelcycles.synthesis import sample_center_equation

PI = math.pi


def test_transformer_columns():
    basis = (CONST, C(1, (0.0, PI), 1.5))
    tr = KernelBasisTransformer(basis=basis).fit(np.array([[1.0]]))
    X = tr.transform(np.array([[0.5], [2.0]]))
    assert X.shape == (2, 2) and np.all(X[:, 0] == 1.0)
    assert list(tr.get_feature_names_out()) == ["1", "C1[0,pi]"]
    with pytest.raises(NotFittedError):
        KernelBasisTransformer(basis=basis).transform([[1.0]])
    assert clone(tr).get_params()["basis"] == basis


def test_regressor_recovers_m2():
    eq = sample_center_equation(1, "2pi", -1, 2, seed=0)
    rho = np.linspace(0.3, 6, 40)
    y = m2_direct(eq, rho)
    reg = StructuredM2Regressor(basis=tuple(m2_basis(eq))).fit(rho[:, None], y)
    assert reg.residual_ < 1e-7
    assert reg.score(rho[:, None], y) > 1 - 1e-12
    with pytest.raises(ValueError):
        reg.fit(rho[:, None], y[:-1])


def test_transformer_in_pipeline():
    basis = (CONST, C(0, (0.0, PI), -0.5))
    pipe = make_pipeline(KernelBasisTransformer(basis=basis))
    assert pipe.fit_transform(np.array([[1.0], [2.0]])).shape == (2, 2)
