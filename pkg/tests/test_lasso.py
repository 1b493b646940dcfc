import numpy as np
import pytest
from sklearn.linear_model import Lasso

from moce.exceptions import DimensionError
from moce.lasso import (Dataset, cross_validate, cv_errors, fit_lasso, lambda_grid,
                        lambda_max, lasso_path, objective, relative_tol, standardize,
                        subgradient_kappa)

from .oracles import enumerate_lasso


def _problem(rng, n=40, p=10):
    X = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[:3] = [1.0, -0.7, 0.4]
    return X, X @ beta + 0.5 * rng.standard_normal(n)


def test_standardize_moments(rng):
    X, y = _problem(rng)
    X = X * rng.uniform(0.1, 10, X.shape[1]) + 3.0
    d = standardize(X, y)
    assert np.allclose(d.X.mean(axis=0), 0, atol=1e-12)
    assert np.allclose((d.X ** 2).sum(axis=0) / d.n, 1.0)
    assert abs(d.y.mean()) < 1e-12
    dn = standardize(X, y, scale="norm")
    assert np.allclose(np.linalg.norm(dn.X, axis=0), 1.0)


def test_standardize_rejects_bad_input():
    with pytest.raises(DimensionError):
        standardize(np.ones((5, 2)), np.ones(4))
    with pytest.raises(ValueError):
        standardize(np.array([[1.0, np.nan], [2.0, 1.0]]), np.ones(2))
    with pytest.raises(DimensionError):
        standardize(np.ones((5, 3)), np.arange(5.0))


def test_constant_column_dropped(rng):
    X, y = _problem(rng)
    X[:, 4] = 2.5
    with pytest.warns(UserWarning, match="constant"):
        d = standardize(X, y)
    assert d.p == X.shape[1] - 1
    assert d.dropped.tolist() == [4]
    raw = d.to_raw_coef(np.ones(d.p))
    assert np.isnan(raw[4])


def test_raw_mapping_matches_ols(rng):
    # with p << n and a tiny lambda the working fit mapped back is raw OLS
    X, y = _problem(rng, n=200, p=5)
    X = X * np.array([0.1, 1.0, 5.0, 30.0, 2.0])
    d = standardize(X, y)
    fit = fit_lasso(d, 1e-10)
    ols = np.linalg.lstsq(np.column_stack([np.ones(200), X]), y, rcond=None)[0]
    assert np.allclose(d.to_raw_coef(fit.beta), ols[1:], rtol=1e-6)
    assert np.allclose(d.from_raw_coef(d.to_raw_coef(fit.beta)), fit.beta)


@pytest.mark.parametrize("seed", range(5))
def test_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    X, y = _problem(rng, n=25, p=5)
    d = Dataset.from_arrays(X, y)
    lam = 0.3 * lambda_max(d)
    assert np.allclose(fit_lasso(d, lam).beta, enumerate_lasso(X, y, lam), atol=1e-7)


def test_matches_sklearn(rng):
    X, y = _problem(rng, n=80, p=30)
    d = standardize(X, y)
    lam = 0.05
    ref = Lasso(alpha=lam, fit_intercept=False, tol=1e-12, max_iter=100000).fit(d.X, d.y)
    fit = fit_lasso(d, lam)
    assert np.allclose(fit.beta, ref.coef_, atol=1e-7)
    assert objective(d, fit.beta, lam) <= objective(d, ref.coef_, lam) + 1e-12


def test_kkt_and_history(rng):
    X, y = _problem(rng, n=60, p=100)
    d = standardize(X, y)
    fit = fit_lasso(d, 0.02)
    assert fit.converged
    kappa = subgradient_kappa(d, fit)
    assert np.all(np.abs(kappa) <= 1.0)
    assert np.array_equal(kappa[fit.active_set], np.sign(fit.beta[fit.active_set]))
    h = fit.objective_history
    assert h.size == fit.iterations
    assert np.all(np.diff(h) <= 1e-12 * np.abs(h[:-1]).max())


def test_zero_above_lambda_max(rng):
    X, y = _problem(rng)
    d = standardize(X, y)
    assert fit_lasso(d, lambda_max(d) * 1.0001).a_hat == 0
    with pytest.raises(ValueError):
        fit_lasso(d, 0.0)


def test_path_entry_order(rng):
    X, y = _problem(rng, n=60, p=15)
    d = standardize(X, y)
    path = lasso_path(d, grid_size=30)
    assert path.betas.shape == (30, 15)
    assert np.isclose(path.lambda_max, lambda_max(d))
    assert np.all(path.betas[0] == 0)
    assert sorted(path.entry_order.tolist()) == list(range(15))
    first = path.entry_index[path.entry_order]
    assert np.all(np.diff(first) >= 0)
    assert set(path.entry_order[:3].tolist()) == {0, 1, 2}


def test_grid_and_relative_tol():
    g = lambda_grid(2.0, grid_size=5, ratio=1e-2)
    assert np.isclose(g[0], 2.0) and np.isclose(g[-1], 0.02)
    assert np.allclose(g[1:] / g[:-1], g[1] / g[0])
    y = np.full(4, 2.0)
    assert np.isclose(relative_tol(y), np.sqrt(1e-7 * 4.0))


def test_cross_validation_is_seeded(rng):
    X, y = _problem(rng, n=60, p=20)
    d = standardize(X, y)
    grid = lambda_grid(lambda_max(d), grid_size=20)
    e1 = cv_errors(d, 5, grid, seed=3)
    e2 = cv_errors(d, 5, grid, seed=3)
    assert np.array_equal(e1, e2)
    lam = cross_validate(d, folds=5, grid=grid, seed=3)
    assert lam == grid[int(np.argmin(e1))]
