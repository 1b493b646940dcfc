import math
import warnings

import numpy as np
import pytest

from moce.expand import (build_expanded_model, expanded_size, injection_rng, lambda_a,
                         lambda_s, select_tau)
from moce.lasso import fit_lasso, lasso_path, standardize


def test_lambda_s_values():
    assert math.isclose(lambda_s(2, 1), 1.1774100225154747, rel_tol=1e-12)
    assert math.isclose(lambda_s(200, 200), 0.016276, rel_tol=1e-4)
    assert lambda_s(50, 40) == 2 * lambda_s(50, 80)
    with pytest.raises(ValueError):
        lambda_s(1, 10)


def test_lambda_a_values():
    # 0.260424 is 8 * 0.032553 with lambda_s already rounded to 6 places
    assert abs(lambda_a(4, 100, 200, 8) - 0.260424) <= 8 * 5e-7 + 5e-7
    assert lambda_a(0, 100, 200, 8) == 8 * lambda_s(200, 100)
    assert math.isclose(lambda_a(4, 100, 200, 12), 3 * lambda_a(4, 100, 200, 4))
    with pytest.warns(UserWarning):
        lambda_a(1, 100, 200, 20)


def test_expanded_size():
    assert expanded_size(200, 0.25, 1.0) == 150
    with pytest.warns(UserWarning):
        assert expanded_size(200, 1.0, 1.0) == 1
    assert expanded_size(200, 0.999, 1.0) == 1
    assert expanded_size(200, 0.0, 1.0) == 199
    sizes = [expanded_size(100, r, 1.0) for r in np.linspace(0, 0.99, 40)]
    assert all(a >= b for a, b in zip(sizes, sizes[1:]))


def test_tau_values():
    X = np.sqrt(200) * np.eye(200)[:, :200]
    t = select_tau(X, np.arange(10))
    assert math.isclose(t.tau_a, 1.1510e-10, rel_tol=1e-4)
    X = np.sqrt(6) * np.eye(6)
    t = select_tau(X, [0, 1, 2])
    assert math.isclose(t.tau_c, 1e-4) and not t.degenerate
    Z = np.zeros((6, 4))
    Z[:, 0] = 1.0
    assert select_tau(Z, [0]).degenerate


def _instance(seed, n=100, p=150):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[[2, 40, 77]] = [0.6, -0.5, 0.4]
    data = standardize(X, X @ beta + 0.4 * rng.standard_normal(n))
    path = lasso_path(data)
    fit = fit_lasso(data, path.lambda_grid[25], warm_start=path.betas[25])
    return data, path, fit


def test_invariants_and_determinism():
    data, path, fit = _instance(0)
    ex = build_expanded_model(path, fit, data, seed=7)
    again = build_expanded_model(path, fit, data, seed=7)
    assert np.array_equal(ex.indices, again.indices)
    assert ex.a_tilde == expanded_size(data.n, ex.lambda_a, path.lambda_max)
    assert np.unique(ex.indices).size == ex.a_tilde
    assert set(fit.active_set) <= set(ex.indices)
    assert not set(ex.injected) & set(ex.selected_at_lambda_s)
    assert ex.tau_a < ex.tau_c
    other = build_expanded_model(path, fit, data, seed=8)
    assert not np.array_equal(ex.injected, other.injected)
    assert np.array_equal(ex.deterministic, other.deterministic)


def test_no_injection_when_deterministic_fills():
    data, path, fit = _instance(1)
    det = build_expanded_model(path, fit, data).deterministic
    ex = build_expanded_model(path, fit, data, a_tilde=det.size)
    assert ex.injected.size == 0 and not ex.truncated
    assert np.array_equal(ex.indices, det)


def test_truncation_keeps_early_entrants():
    data, path, fit = _instance(2)
    ex = build_expanded_model(path, fit, data, a_tilde=2)
    assert ex.truncated and ex.a_tilde == 2
    rank = np.argsort(path.entry_order)
    full = build_expanded_model(path, fit, data).deterministic
    keep = full[np.argsort(rank[full], kind="stable")][:2]
    assert np.array_equal(ex.indices, np.sort(keep))


def test_fill_when_pool_short():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((60, 12))
    data = standardize(X, X[:, :8] @ np.r_[3.0, np.full(7, 0.25)] + 0.1 * rng.standard_normal(60))
    path = lasso_path(data)
    fit = fit_lasso(data, path.lambda_grid[3], warm_start=path.betas[3])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ex = build_expanded_model(path, fit, data, a_tilde=11)
    assert ex.a_tilde == 11
    assert ex.filled.size > 0
    assert set(ex.filled) <= set(ex.selected_at_lambda_s)


def test_injection_rng_reproducible():
    a = injection_rng(5).choice(100, 10, replace=False)
    b = injection_rng(5).choice(100, 10, replace=False)
    assert np.array_equal(a, b)


def test_bad_a_tilde():
    data, path, fit = _instance(4)
    with pytest.raises(ValueError):
        build_expanded_model(path, fit, data, a_tilde=data.n)
