"""Regression-based polynomial chaos expansion for uniform inputs.

The basis is the tensor product of normalized Legendre polynomials truncated
at a total degree. With inputs mapped affinely onto [-1, 1] these are
orthonormal under the uniform product measure, so the mean is the constant
coefficient, the variance is the sum of the remaining squared coefficients,
and total-order Sobol indices are read off the coefficients directly.
"""

from __future__ import annotations

import itertools
from math import comb

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y


class RankDeficient(np.linalg.LinAlgError):
    pass


class ZeroVariance(ZeroDivisionError):
    pass


def total_degree_indices(n_features: int, order: int) -> np.ndarray:
    """Multi-indices with total degree <= order, graded, constant term first."""
    rows: list[tuple[int, ...]] = []
    for degree in range(order + 1):
        for combo in itertools.combinations_with_replacement(range(n_features), degree):
            alpha = [0] * n_features
            for k in combo:
                alpha[k] += 1
            rows.append(tuple(alpha))
    return np.array(rows, dtype=int).reshape(-1, n_features)


def n_terms(n_features: int, order: int) -> int:
    return comb(n_features + order, order)


def legendre_normalized(z: np.ndarray, max_degree: int) -> np.ndarray:
    """Values of sqrt(2n+1) * P_n(z) for n = 0..max_degree, shape (..., max_degree+1)."""
    z = np.asarray(z, dtype=float)
    out = np.empty(z.shape + (max_degree + 1,))
    out[..., 0] = 1.0
    if max_degree >= 1:
        out[..., 1] = z
    for n in range(1, max_degree):
        out[..., n + 1] = ((2 * n + 1) * z * out[..., n] - n * out[..., n - 1]) / (n + 1)
    return out * np.sqrt(2 * np.arange(max_degree + 1) + 1)


def design_matrix(Z: np.ndarray, multi_indices: np.ndarray) -> np.ndarray:
    """Basis evaluated at points ``Z`` in [-1, 1]^d."""
    Z = np.atleast_2d(Z)
    order = int(multi_indices.max()) if multi_indices.size else 0
    values = legendre_normalized(Z, order)  # (n, d, order+1)
    psi = np.ones((Z.shape[0], len(multi_indices)))
    for k in range(Z.shape[1]):
        psi *= values[:, k, multi_indices[:, k]]
    return psi


class PolynomialChaosRegressor(RegressorMixin, BaseEstimator):
    """Least-squares PCE surrogate on a box of uniform inputs.

    Parameters
    ----------
    order : int, default=2
        Maximum total degree of the basis.
    bounds : array-like of shape (n_features, 2), default=None
        Support of each uniform input. When ``None`` the per-feature range of
        the training data is used.
    min_samples_ratio : float, default=2.0
        Minimum number of samples per basis term accepted by ``fit``.

    Attributes
    ----------
    coef_ : ndarray of shape (n_terms,)
        Coefficients on the orthonormal basis; ``coef_[0]`` is the mean.
    multi_indices_ : ndarray of shape (n_terms, n_features)
    bounds_ : ndarray of shape (n_features, 2)
    loo_error_ : float
        Leave-one-out error relative to the sample variance of ``y``.
    """

    def __init__(self, order=2, bounds=None, min_samples_ratio=2.0):
        self.order = order
        self.bounds = bounds
        self.min_samples_ratio = min_samples_ratio

    def _to_unit(self, X):
        lo, hi = self.bounds_[:, 0], self.bounds_[:, 1]
        return 2.0 * (X - lo) / (hi - lo) - 1.0

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        n, d = X.shape
        if self.bounds is None:
            bounds = np.column_stack([X.min(axis=0), X.max(axis=0)])
        else:
            bounds = np.asarray(self.bounds, dtype=float).reshape(d, 2)
        if np.any(bounds[:, 1] <= bounds[:, 0]):
            raise ValueError("every input needs a non-empty range (lo < hi)")
        self.bounds_ = bounds
        self.multi_indices_ = total_degree_indices(d, int(self.order))
        n_terms = len(self.multi_indices_)
        if n < self.min_samples_ratio * n_terms:
            raise ValueError(
                f"{n} samples for {n_terms} basis terms; need at least {self.min_samples_ratio:g}x"
            )
        psi = design_matrix(self._to_unit(X), self.multi_indices_)
        q, r = np.linalg.qr(psi)
        diag = np.abs(np.diag(r))
        if diag.size and diag.min() <= 1e-10 * diag.max():
            raise RankDeficient("design matrix is rank deficient for this basis")
        self.coef_ = np.linalg.solve(r, q.T @ y)
        resid = y - psi @ self.coef_
        leverage = np.sum(q * q, axis=1)
        loo = resid / np.clip(1.0 - leverage, 1e-12, None)
        var_y = float(np.var(y))
        self.loo_error_ = float(np.mean(loo**2) / var_y) if var_y > 0 else float(np.mean(loo**2))
        self.n_features_in_ = d
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return design_matrix(self._to_unit(X), self.multi_indices_) @ self.coef_

    @property
    def mean_(self) -> float:
        check_is_fitted(self, "coef_")
        return float(self.coef_[0])

    @property
    def variance_(self) -> float:
        check_is_fitted(self, "coef_")
        return float(np.sum(self.coef_[1:] ** 2))

    @property
    def total_order_indices_(self) -> np.ndarray:
        return sobol_total(self)


def moments(surrogate: PolynomialChaosRegressor) -> tuple[float, float]:
    """(mean, variance) from the coefficients."""
    return surrogate.mean_, surrogate.variance_


def sobol_total(surrogate: PolynomialChaosRegressor) -> np.ndarray:
    """Total-order indices: squared coefficients of every term involving the input."""
    check_is_fitted(surrogate, "coef_")
    var = surrogate.variance_
    if var <= (1e-12 * max(1.0, abs(surrogate.mean_))) ** 2:
        raise ZeroVariance("surrogate has zero variance")
    sq = surrogate.coef_**2
    involved = surrogate.multi_indices_ > 0  # (n_terms, d)
    return (sq[:, None] * involved).sum(axis=0) / var
