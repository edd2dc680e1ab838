"""scikit-learn wrappers around the kernel basis.

Only the two places where fit/transform/predict is a natural fit get an
estimator: mapping ρ to kernel-basis columns, and least-squares fitting of
sampled values onto such a basis.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .quadrature import EPSABS, EPSREL, basis_matrix


def _rho_column(X) -> np.ndarray:
    X = check_array(X, ensure_2d=False, dtype=float)
    X = np.asarray(X)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"expected a single rho column, got shape {X.shape}")
        X = X[:, 0]
    return X


class KernelBasisTransformer(TransformerMixin, BaseEstimator):
    """rho -> matrix of basis values (or their order-th rho derivatives)."""

    def __init__(self, basis=(), order=0, epsabs=EPSABS, epsrel=EPSREL):
        self.basis = basis
        self.order = order
        self.epsabs = epsabs
        self.epsrel = epsrel

    def fit(self, X, y=None):
        _rho_column(X)
        self.n_features_in_ = 1
        self.n_basis_ = len(self.basis)
        return self

    def transform(self, X):
        check_is_fitted(self, "n_basis_")
        rho = _rho_column(X)
        return basis_matrix(list(self.basis), rho, self.order, self.epsabs, self.epsrel)

    def get_feature_names_out(self, input_features=None):
        return np.array([t.label() for t in self.basis], dtype=object)


class StructuredM2Regressor(RegressorMixin, BaseEstimator):
    """Least-squares coefficients of sampled data in a fixed kernel basis.

    Columns are normalised before the solve; ``coef_`` is reported in the
    original scaling.  ``residual_`` is max|fit - y| / max(1, max|y|).
    """

    def __init__(self, basis=(), epsabs=1e-13, epsrel=1e-13):
        self.basis = basis
        self.epsabs = epsabs
        self.epsrel = epsrel

    def fit(self, X, y):
        rho = _rho_column(X)
        y = check_array(np.asarray(y, dtype=float).reshape(-1, 1), dtype=float)[:, 0]
        if y.size != rho.size:
            raise ValueError("X and y lengths differ")
        A = basis_matrix(list(self.basis), rho, 0, self.epsabs, self.epsrel)
        norms = np.linalg.norm(A, axis=0)
        norms[norms == 0] = 1.0
        sol, _, rank, sv = np.linalg.lstsq(A / norms, y, rcond=None)
        self.coef_ = sol / norms
        self.rank_ = int(rank)
        self.singular_values_ = sv
        self.n_features_in_ = 1
        fitted = A @ self.coef_
        self.residual_ = float(np.max(np.abs(fitted - y)) / max(1.0, float(np.max(np.abs(y)))))
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        rho = _rho_column(X)
        return basis_matrix(list(self.basis), rho, 0, self.epsabs, self.epsrel) @ self.coef_
