import json

import numpy as np
import pytest

from odbsample.estimators import (
    FitError,
    SeparationError,
    fit,
    is_separated,
    logistic_features,
    logistic_fit,
    ols_features,
    ols_fit,
)
from odbsample.model import Dataset, FeatureBasis, ModelSpec, logistic


def test_ols_noiseless_line():
    data = Dataset(np.array([[0.0], [1.0], [2.5]]), np.array([2.0, 5.0, 9.5]))
    res = ols_fit(data, [0, 1, 2], ModelSpec(FeatureBasis.linear(1)))
    assert np.allclose(res.theta_hat, [2.0, 3.0], atol=1e-10)


def test_ols_intercept_only_is_mean(rng):
    y = rng.normal(size=9)
    res = ols_features(np.ones((9, 1)), y)
    assert res.theta_hat[0] == pytest.approx(y.mean())


def test_ols_matches_explicit_inverse_oracle(rng):
    x = rng.normal(size=(30, 2))
    f = FeatureBasis.linear(2).expand(x)
    y = f @ np.array([1.0, -2.0, 0.5]) + rng.normal(size=30)
    res = ols_features(f, y)
    oracle = np.linalg.inv(f.T @ f) @ f.T @ y
    assert np.allclose(res.theta_hat, oracle, atol=1e-10)
    resid = y - f @ res.theta_hat
    assert res.sigma2_hat == pytest.approx(resid @ resid / 27)
    assert np.allclose(res.covariance, res.sigma2_hat * np.linalg.inv(f.T @ f), rtol=1e-10)


def test_ols_residuals_orthogonal(rng):
    f = FeatureBasis.quadratic(3).expand(rng.uniform(-1, 1, size=(200, 3)))
    y = rng.normal(size=200) * 100
    res = ols_features(f, y)
    resid = y - f @ res.theta_hat
    scale = np.linalg.norm(f, axis=0) * np.linalg.norm(resid)
    assert np.all(np.abs(f.T @ resid) <= 1e-8 * scale)


def test_ols_singular_sample():
    data = Dataset(np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0], [4.0, 8.0]]), np.arange(4.0))
    with pytest.raises(FitError):
        ols_fit(data, [0, 1, 2, 3], ModelSpec(FeatureBasis.linear(2)))


def test_fit_requires_response():
    with pytest.raises(FitError):
        ols_fit(Dataset(np.ones((3, 1))), [0, 1, 2], ModelSpec(FeatureBasis.linear(1)))


def test_logistic_symmetric_data_zero_intercept():
    x = np.array([-2.0, -1.0, -0.5, 0.5, 1.0, 2.0, -1.5, 1.5])
    y = np.array([0, 1, 0, 1, 0, 1, 0, 1], dtype=float)
    xs = np.concatenate([x, -x])
    ys = np.concatenate([y, 1 - y])
    res = logistic_fit(Dataset(xs[:, None], ys), np.arange(16), ModelSpec(FeatureBasis.linear(1), "logistic"))
    assert abs(res.theta_hat[0]) < 1e-10


def test_logistic_all_ones_is_separation():
    data = Dataset(np.arange(5.0)[:, None], np.ones(5))
    with pytest.raises(SeparationError):
        logistic_fit(data, np.arange(5), ModelSpec(FeatureBasis.linear(1), "logistic"))


def test_logistic_complete_separation_detected():
    x = np.array([-3.0, -2.0, -1.0, 1.0, 2.0, 3.0])
    y = (x > 0).astype(float)
    f = FeatureBasis.linear(1).expand(x[:, None])
    assert is_separated(f, y)
    with pytest.raises(SeparationError):
        logistic_features(f, y)


def test_logistic_self_consistency(rng):
    theta = np.array([-0.5, 1.0, 2.0])
    f = FeatureBasis.linear(2).expand(rng.uniform(-1, 1, size=(500, 2)))
    y = (rng.random(500) < logistic(f @ theta)).astype(float)
    trace = []
    res = logistic_features(f, y, loglik_trace=trace)
    score = f.T @ (y - logistic(f @ res.theta_hat))
    assert np.linalg.norm(score) < 1e-8 * 500
    se = np.sqrt(np.diag(res.covariance))
    assert np.all(np.abs(res.theta_hat - theta) < 4 * se)
    assert all(b >= a for a, b in zip(trace, trace[1:]))
    assert not is_separated(f, y)


def test_logistic_rejects_non_binary():
    with pytest.raises(FitError):
        logistic_features(np.ones((3, 1)), np.array([0.0, 0.5, 1.0]))


def test_fit_dispatch_and_json(rng):
    x = rng.normal(size=(40, 1))
    data = Dataset(x, (rng.random(40) < logistic(x[:, 0])).astype(float))
    res = fit(data, np.arange(40), ModelSpec(FeatureBasis.linear(1), "logistic"))
    d = json.loads(res.to_json())
    assert set(d) == {"theta_hat", "covariance", "sigma2_hat", "converged", "iterations"}
    assert d["converged"] is True and d["sigma2_hat"] is None
    cov = np.array(d["covariance"])
    assert np.allclose(cov, cov.T) and np.linalg.eigvalsh(cov).min() > 0
