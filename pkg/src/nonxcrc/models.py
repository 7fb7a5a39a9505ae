"""From-scratch linear predictors: multilabel logistic regression and (weighted) least squares."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .core import InputError


class LinearModel(NamedTuple):
    coefficients: np.ndarray
    intercept: float

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.coefficients + self.intercept


def _augment(X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((X.shape[0], 1))])


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class MultiLabelLogisticRegression(BaseEstimator):
    """One independent L2-regularized logistic regression per label column.

    All labels are fit jointly by damped Newton iterations; each label's
    problem is separate, so the joint solve is only a vectorization.

    Parameters
    ----------
    l2 : float
        Ridge penalty on coefficients and intercept, relative to the mean log-loss.
    tol : float
        Stop once every label's gradient norm is below this.
    max_iter : int
    warm_start : bool
        Start from the previous solution when refitting on same-shaped data.
    """

    def __init__(self, l2: float = 1e-4, tol: float = 1e-6, max_iter: int = 500,
                 warm_start: bool = False):
        self.l2 = l2
        self.tol = tol
        self.max_iter = max_iter
        self.warm_start = warm_start

    def fit(self, X, Y):
        X = check_array(X, ensure_min_features=0)
        Y = np.asarray(Y)
        if Y.ndim == 1:
            Y = Y[:, None]
        if X.shape[0] < 2:
            raise InputError("logistic regression needs at least 2 examples")
        if Y.shape[0] != X.shape[0]:
            raise InputError(f"{X.shape[0]} rows of features but {Y.shape[0]} rows of labels")
        if not np.all(np.isin(Y, (-1, 1))):
            raise InputError("labels must be -1 or +1")
        n, d = X.shape
        M = Y.shape[1]
        Xa = _augment(X)
        p = d + 1
        target = (Y > 0).astype(float)
        sign = Y.astype(float)

        theta = np.zeros((p, M))
        if self.warm_start and getattr(self, "coef_", None) is not None \
                and self.coef_.shape == (M, d):
            theta = np.vstack([self.coef_.T, self.intercept_[None, :]])

        outer = np.einsum("ni,nj->nij", Xa, Xa).reshape(n, p * p)
        eye = np.eye(p)

        def objective(th):
            z = Xa @ th
            return np.logaddexp(0.0, -sign * z).mean(axis=0) + 0.5 * self.l2 * (th ** 2).sum(axis=0)

        f = objective(theta)
        self.n_iter_ = 0
        for it in range(self.max_iter):
            prob = _sigmoid(Xa @ theta)
            grad = Xa.T @ (prob - target) / n + self.l2 * theta
            if np.max(np.linalg.norm(grad, axis=0)) <= self.tol:
                break
            curv = prob * (1.0 - prob)
            H = (curv.T @ outer).reshape(M, p, p) / n + self.l2 * eye
            step = np.linalg.solve(H, grad.T[:, :, None])[:, :, 0].T
            slope = np.sum(grad * step, axis=0)
            t = np.ones(M)
            for _ in range(40):
                cand = theta - t * step
                f_new = objective(cand)
                bad = f_new > f - 1e-4 * t * slope
                if not bad.any():
                    break
                t = np.where(bad, 0.5 * t, t)
            theta, f = cand, f_new
            self.n_iter_ = it + 1

        self.coef_ = theta[:-1].T.copy()
        self.intercept_ = theta[-1].copy()
        self.n_features_in_ = d
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "coef_")
        X = check_array(X, ensure_min_features=0)
        return X @ self.coef_.T + self.intercept_

    def predict_proba(self, X) -> np.ndarray:
        """``(n, M)`` probabilities of label +1, clipped into the open interval (0, 1)."""
        return np.clip(_sigmoid(self.decision_function(X)), 1e-15, 1 - 1e-15)

    def predict(self, X) -> np.ndarray:
        return np.where(self.predict_proba(X) >= 0.5, 1, -1)

    @property
    def per_label(self) -> list:
        check_is_fitted(self, "coef_")
        return [LinearModel(c, float(b)) for c, b in zip(self.coef_, self.intercept_)]


class LeastSquares(RegressorMixin, BaseEstimator):
    """Ordinary / weighted least squares with intercept, via the normal equations.

    A ridge term ``ridge`` is added to the Gram matrix only when it is singular
    or numerically close to it.
    """

    def __init__(self, ridge: float = 1e-8, cond_limit: float = 1e12):
        self.ridge = ridge
        self.cond_limit = cond_limit

    def fit(self, X, y, sample_weight=None):
        X = check_array(X, ensure_min_features=0)
        y = np.asarray(y, dtype=float).ravel()
        if y.size != X.shape[0]:
            raise InputError(f"{X.shape[0]} rows of features but {y.size} targets")
        t = np.ones_like(y) if sample_weight is None else np.asarray(sample_weight, dtype=float).ravel()
        if t.size != y.size or np.any(t < 0):
            raise InputError("sample weights must be nonnegative, one per row")
        Xa = _augment(X)
        Xw = Xa * t[:, None]
        gram = Xw.T @ Xa
        rhs = Xw.T @ y
        self.ridge_used_ = False
        if not np.isfinite(np.linalg.cond(gram)) or np.linalg.cond(gram) > self.cond_limit:
            gram = gram + self.ridge * np.eye(gram.shape[0])
            self.ridge_used_ = True
        theta = np.linalg.solve(gram, rhs)
        self.coef_ = theta[:-1]
        self.intercept_ = float(theta[-1])
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "coef_")
        X = check_array(X, ensure_min_features=0)
        return X @ self.coef_ + self.intercept_

    @property
    def model(self) -> LinearModel:
        check_is_fitted(self, "coef_")
        return LinearModel(self.coef_, self.intercept_)


def fit_logistic(features, labels, **config) -> MultiLabelLogisticRegression:
    return MultiLabelLogisticRegression(**config).fit(features, labels)


def fit_least_squares(features, targets, sample_weights=None) -> LeastSquares:
    return LeastSquares().fit(features, targets, sample_weight=sample_weights)
