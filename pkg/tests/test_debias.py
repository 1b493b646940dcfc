import numpy as np
import pytest

from moce.debias import (MoceFit, blockwise_estimate, confidence_intervals, linear_contrast,
                         make_contrast, moce_covariance, moce_fit, remainders, z_value)
from moce.expand import build_expanded_model
from moce.lasso import Dataset, fit_lasso, lasso_path, standardize, subgradient_kappa
from moce.linalg import build_ridge_block_factor

from .oracles import dense_L


def _pipeline(seed, n=12, p=20, a_tilde=6, lam_pos=20):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[:2] = [1.0, -0.8]
    data = standardize(X, X @ beta + 0.3 * rng.standard_normal(n))
    path = lasso_path(data)
    fit = fit_lasso(data, path.lambda_grid[lam_pos], warm_start=path.betas[lam_pos])
    ex = build_expanded_model(path, fit, data, a_tilde=a_tilde, seed=seed)
    return data, fit, ex, beta


def test_combined_form_matches_dense():
    data, fit, ex, _ = _pipeline(0)
    mf = moce_fit(data, fit, ex)
    Linv = np.linalg.inv(dense_L(data.X, ex.indices, ex.tau_a, ex.tau_c))
    ref = fit.beta + fit.lam * Linv @ subgradient_kappa(data, fit)
    assert np.abs(mf.beta_tilde - ref).max() <= 1e-10 * max(1.0, np.abs(ref).max())
    assert np.allclose(blockwise_estimate(fit.beta, fit.lam, mf.kappa, mf.factor),
                       mf.beta_tilde, atol=1e-10)


def test_covariance_matches_dense():
    data, fit, ex, _ = _pipeline(1, n=30, p=40, a_tilde=10)
    mf = moce_fit(data, fit, ex)
    Linv = np.linalg.inv(dense_L(data.X, ex.indices, ex.tau_a, ex.tau_c))
    S = data.X.T @ data.X / data.n
    V = mf.sigma_hat ** 2 * Linv @ S @ Linv.T
    idx = np.arange(40)
    assert np.allclose(moce_covariance(mf, idx), np.diag(V), rtol=1e-9, atol=1e-12)
    d = np.zeros(40)
    d[[3, 17]] = 1 / np.sqrt(2)
    assert np.isclose(moce_covariance(mf, make_contrast(d)), d @ V @ d, rtol=1e-9)


def test_zero_design_blockwise():
    n, p = 6, 5
    data = Dataset.from_arrays(np.zeros((n, p)), np.zeros(n))
    from moce.lasso import LassoFit
    beta = np.array([0.1, 0.0, -0.2, 0.0, 0.0])
    kappa = np.array([1.0, 0.3, -1.0, -0.5, 0.0])
    fit = LassoFit(beta, 0.4, kappa, 1.0, True, 1, np.empty(0))
    f = build_ridge_block_factor(data.X, [0, 1], 2.0, 5.0)
    tau = np.array([2.0, 2.0, 5.0, 5.0, 5.0])
    assert np.allclose(blockwise_estimate(beta, 0.4, kappa, f), beta + 0.4 * kappa / tau)


def test_small_lambda_limit():
    data, fit, ex, _ = _pipeline(2)
    f = build_ridge_block_factor(data.X, ex.indices, ex.tau_a, ex.tau_c)
    assert np.allclose(blockwise_estimate(fit.beta, 1e-14, fit.kappa, f), fit.beta, atol=1e-6)


def test_intervals():
    assert np.isclose(z_value(0.95) * 0.033, 0.0647, atol=5e-5)
    for bad in (0.0, 1.0, 1.5):
        with pytest.raises(ValueError):
            z_value(bad)
    data, fit, ex, _ = _pipeline(3, n=40, p=60, a_tilde=15)
    mf = moce_fit(data, fit, ex)
    ci = confidence_intervals(mf, 0.9)
    assert np.allclose(ci.upper - ci.estimate, ci.estimate - ci.lower)
    assert np.all(ci.se > 0) and not ci.degenerate.any()
    j = 5
    e = np.zeros(60)
    e[j] = 1.0
    c = linear_contrast(mf, e, level=0.9)
    assert np.isclose(c.lower, ci.lower[j]) and np.isclose(c.upper, ci.upper[j])


def test_contrast_validation():
    with pytest.raises(ValueError):
        make_contrast([1.0, 1.0])
    with pytest.raises(ValueError):
        make_contrast(np.ones(9) / 3.0, n=10)
    assert make_contrast([0.6, 0.8]).support_size == 2


def test_contrast_permutation_invariance():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((30, 8))
    y = X[:, 0] - X[:, 1] + 0.5 * rng.standard_normal(30)
    perm = rng.permutation(8)
    d = rng.standard_normal(8)
    d /= np.linalg.norm(d)
    out = []
    for Xp, dp in ((X, d), (X[:, perm], d[perm])):
        data = standardize(Xp, y)
        fit = fit_lasso(data, 0.05)
        path = lasso_path(data)
        ex = build_expanded_model(path, fit, data, a_tilde=8 - 1)
        # pin the same expanded columns so only the labels differ
        out.append((data, fit, ex))
    (d0, f0, e0), (d1, f1, e1) = out
    idx1 = np.sort(np.argsort(perm)[e0.indices])
    from dataclasses import replace
    e1 = replace(e1, indices=idx1)
    m0, m1 = moce_fit(d0, f0, e0), moce_fit(d1, f1, e1)
    c0, c1 = linear_contrast(m0, d), linear_contrast(m1, d[perm])
    assert np.isclose(c0.estimate, c1.estimate, atol=1e-7)
    assert np.isclose(c0.se, c1.se, rtol=1e-7)


def test_remainder_identity():
    rng = np.random.default_rng(5)
    n, p = 40, 60
    X = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[[1, 9]] = [0.7, -0.5]
    eps = 0.3 * rng.standard_normal(n)
    data = standardize(X, X @ beta + eps)
    bstar = data.from_raw_coef(beta)
    path = lasso_path(data)
    fit = fit_lasso(data, path.lambda_grid[30], warm_start=path.betas[30])
    ex = build_expanded_model(path, fit, data, a_tilde=15)
    mf = moce_fit(data, fit, ex)
    r_a, r_c = remainders(mf, bstar)
    r = np.empty(p)
    r[mf.factor.expanded_indices], r[mf.factor.complement_indices] = r_a, r_c
    noise = mf.factor.apply_inverse(data.X.T @ (data.y - data.X @ bstar)) / n
    assert np.allclose(mf.beta_tilde - bstar, noise + r, atol=1e-9)


def test_zero_variance_flagged():
    mf = MoceFit(np.zeros(3), np.zeros(3), 0.1, np.zeros(3), None, 1.0, 4, None,
                 np.array([[1.0, 0, 0, 0], [0, 0, 0, 0], [0, 1.0, 0, 0]]))
    ci = confidence_intervals(mf)
    assert ci.degenerate.tolist() == [False, True, False]
    assert ci.lower[1] == ci.upper[1] == 0.0
