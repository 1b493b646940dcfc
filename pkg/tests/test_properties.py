import numpy as np
from hypothesis import given, settings, strategies as st

from moce.expand import expanded_size
from moce.lasso import Dataset, fit_lasso, lambda_max
from moce.linalg import build_ridge_block_factor


@st.composite
def designs(draw):
    n = draw(st.integers(4, 25))
    p = draw(st.integers(2, 35))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    return np.random.default_rng(seed), n, p


@settings(max_examples=40, deadline=None)
@given(designs(), st.floats(0.01, 0.99))
def test_lasso_kkt(case, frac):
    rng, n, p = case
    X = rng.standard_normal((n, p))
    y = rng.standard_normal(n)
    data = Dataset.from_arrays(X, y)
    lam = frac * lambda_max(data)
    fit = fit_lasso(data, lam)
    grad = X.T @ (y - X @ fit.beta) / n
    act = fit.beta != 0
    assert np.all(np.abs(grad[~act]) <= lam + 1e-6)
    assert np.allclose(grad[act], lam * np.sign(fit.beta[act]), atol=1e-6)


@settings(max_examples=40, deadline=None)
@given(designs(), st.floats(-6, 0), st.floats(-4, 0))
def test_factor_round_trip(case, log_ta, log_tc):
    rng, n, p = case
    X = rng.standard_normal((n, p))
    at = int(rng.integers(1, min(n - 1, p) + 1))
    f = build_ridge_block_factor(X, rng.choice(p, at, replace=False), 10 ** log_ta, 10 ** log_tc)
    v = rng.standard_normal(p)
    assert np.linalg.norm(f.apply(f.apply_inverse(v)) - v) <= 1e-8 * np.linalg.norm(v)
    assert np.linalg.norm(f.apply_inverse_transpose(v) - f.dense_inverse().T @ v) \
        <= 1e-8 * max(1.0, np.linalg.norm(f.dense_inverse().T @ v))


@given(st.integers(2, 500), st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_expanded_size_monotone(n, r1, r2):
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        a1, a2 = expanded_size(n, min(r1, r2), 1.0), expanded_size(n, max(r1, r2), 1.0)
    assert 1 <= a2 <= a1 <= n - 1
