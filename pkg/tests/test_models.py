import numpy as np
import pytest
from sklearn.base import clone

from nonxcrc.core import InputError
from nonxcrc.models import (LeastSquares, MultiLabelLogisticRegression, fit_least_squares,
                            fit_logistic)


def test_logistic_separable_1d():
    x = np.linspace(-2, 2, 40).reshape(-1, 1)
    x = x[np.abs(x[:, 0]) > 0.05]
    y = np.sign(x)
    m = fit_logistic(x, y)
    assert np.mean(m.predict(x) == y) == 1.0


def test_logistic_all_positive():
    X = np.random.default_rng(0).standard_normal((30, 3))
    m = fit_logistic(X, np.ones((30, 1)))
    assert np.all(m.predict_proba(X) >= 0.5)


def test_logistic_intercept_only_matches_frequency():
    y = np.array([1] * 7 + [-1] * 13).reshape(-1, 1)
    m = fit_logistic(np.empty((20, 0)), y)
    assert m.predict_proba(np.empty((2, 0)))[0, 0] == pytest.approx(0.35, abs=0.01)


def test_logistic_errors():
    with pytest.raises(InputError):
        fit_logistic(np.zeros((1, 2)), [[1]])
    with pytest.raises(InputError):
        fit_logistic(np.zeros((3, 2)), [[1], [0], [1]])


def test_logistic_stationarity_and_multilabel(rng):
    X = rng.standard_normal((200, 4))
    Y = np.where(X[:, :3] + 0.5 * rng.standard_normal((200, 3)) > 0, 1, -1)
    m = MultiLabelLogisticRegression(l2=1e-3).fit(X, Y)
    assert m.coef_.shape == (3, 4) and len(m.per_label) == 3
    Xa = np.hstack([X, np.ones((200, 1))])
    p = m.predict_proba(X)
    theta = np.vstack([m.coef_.T, m.intercept_])
    grad = Xa.T @ (p - (Y > 0)) / 200 + 1e-3 * theta
    assert np.abs(grad).max() < 1e-6
    # per-label independence: fitting one column alone gives the same model
    single = MultiLabelLogisticRegression(l2=1e-3).fit(X, Y[:, 1])
    np.testing.assert_allclose(single.coef_[0], m.coef_[1], atol=1e-6)


def test_logistic_proba_monotone_in_score(rng):
    X = rng.standard_normal((100, 2))
    m = fit_logistic(X, np.where(X[:, :1] > 0, 1, -1))
    z = m.decision_function(X)[:, 0]
    p = m.predict_proba(X)[:, 0]
    order = np.argsort(z)
    assert np.all(np.diff(p[order]) >= 0)
    assert np.all((p > 0) & (p < 1))


def test_logistic_warm_start_same_solution(rng):
    X = rng.standard_normal((150, 3))
    Y = np.where(X + 0.3 * rng.standard_normal((150, 3)) > 0.2, 1, -1)
    cold = MultiLabelLogisticRegression().fit(X, Y)
    warm = MultiLabelLogisticRegression(warm_start=True).fit(X[:100], Y[:100]).fit(X, Y)
    np.testing.assert_allclose(warm.coef_, cold.coef_, rtol=1e-4, atol=1e-4)


def test_least_squares_exact_line():
    m = fit_least_squares([[0.0], [1.0]], [0.0, 1.0])
    np.testing.assert_allclose(m.coef_, [1.0], atol=1e-12)
    assert m.intercept_ == pytest.approx(0.0, abs=1e-12)


def test_least_squares_zero_weight_excludes_point():
    m = fit_least_squares([[0.0], [1.0], [2.0]], [0.0, 1.0, 5.0], sample_weights=[1, 1, 0])
    np.testing.assert_allclose([m.coef_[0], m.intercept_], [1.0, 0.0], atol=1e-10)


def test_weighted_residuals_orthogonal(rng):
    X = rng.standard_normal((50, 4))
    y = X @ rng.standard_normal(4) + rng.standard_normal(50)
    t = rng.random(50)
    m = fit_least_squares(X, y, t)
    r = y - m.predict(X)
    Xa = np.hstack([X, np.ones((50, 1))])
    np.testing.assert_allclose(Xa.T @ (t * r), 0.0, atol=1e-6)


def test_wls_unit_weights_equal_ols(rng):
    X = rng.standard_normal((40, 3))
    y = rng.standard_normal(40)
    a, b = fit_least_squares(X, y), fit_least_squares(X, y, np.ones(40))
    np.testing.assert_allclose(a.coef_, b.coef_, atol=1e-10)
    assert a.intercept_ == pytest.approx(b.intercept_, abs=1e-10)


def test_ols_feature_permutation_invariance(rng):
    X = rng.standard_normal((60, 5))
    y = rng.standard_normal(60)
    perm = rng.permutation(5)
    a, b = fit_least_squares(X, y), fit_least_squares(X[:, perm], y)
    np.testing.assert_allclose(a.coef_[perm], b.coef_, atol=1e-8)


def test_least_squares_singular_uses_ridge():
    X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    m = LeastSquares().fit(X, [1.0, 2.0, 3.0])
    assert m.ridge_used_
    np.testing.assert_allclose(m.predict(X), [1.0, 2.0, 3.0], atol=1e-5)


def test_sklearn_compatibility():
    m = clone(MultiLabelLogisticRegression(l2=0.5))
    assert m.get_params()["l2"] == 0.5
    assert LeastSquares().fit([[0.0], [1.0]], [0.0, 1.0]).score([[0.0], [1.0]], [0.0, 1.0]) == \
        pytest.approx(1.0)
