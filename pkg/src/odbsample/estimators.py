"""Model fits on a subsample: OLS for the linear model, Newton-Raphson ML for logistic."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linprog

from . import linalg
from .model import Dataset, Family, ModelSpec, logistic


class FitError(ValueError):
    pass


class SeparationError(FitError):
    """Logistic MLE does not exist: the responses are (quasi-)separated."""


@dataclass(frozen=True)
class FitResult:
    theta_hat: np.ndarray
    covariance: np.ndarray
    converged: bool
    iterations: int
    sigma2_hat: float | None = None

    def to_dict(self) -> dict:
        return {
            "theta_hat": self.theta_hat.tolist(),
            "covariance": self.covariance.tolist(),
            "sigma2_hat": self.sigma2_hat,
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _rows(rows) -> np.ndarray:
    return np.asarray(getattr(rows, "rows", rows), dtype=int)


def ols_features(f: np.ndarray, y: np.ndarray) -> FitResult:
    n, q = f.shape
    qm, r = np.linalg.qr(f)
    diag = np.abs(np.diag(r))
    if diag.min() < linalg.PIVOT_RTOL * diag.max():
        raise FitError("normal equations are singular; the sample spans a proper subspace")
    theta = sla.solve_triangular(r, qm.T @ y)
    resid = y - f @ theta
    sigma2 = float(resid @ resid / (n - q)) if n > q else float("nan")
    r_inv = sla.solve_triangular(r, np.eye(q))
    cov = sigma2 * (r_inv @ r_inv.T)
    return FitResult(theta, 0.5 * (cov + cov.T), True, 1, sigma2)


def ols_fit(data: Dataset, rows, model: ModelSpec) -> FitResult:
    """Least squares on the selected rows (raw covariate coordinates).

    Covariance is sigma2_hat (F_s^T F_s)^-1 with sigma2_hat = RSS / (n - q).
    """
    if data.response is None:
        raise FitError("dataset has no response column")
    idx = _rows(rows)
    return ols_features(model.basis.expand(data.covariates[idx]), data.response[idx])


def _loglik(f, y, theta):
    eta = f @ theta
    # log(1 + e^eta) computed stably
    return float(y @ eta - np.logaddexp(0.0, eta).sum())


def is_separated(f: np.ndarray, y: np.ndarray) -> bool:
    """True when some beta != 0 has (2y - 1) f^T beta >= 0 for every row.

    Solved as a bounded LP maximizing the total signed margin.
    """
    s = 2.0 * y - 1.0
    a = f * s[:, None]
    res = linprog(-a.sum(axis=0), A_ub=-a, b_ub=np.zeros(len(y)), bounds=[(-1.0, 1.0)] * f.shape[1],
                  method="highs")
    return bool(res.status == 0 and -res.fun > 1e-7)


def logistic_features(f: np.ndarray, y: np.ndarray, max_iter: int = 100, score_tol: float = 1e-9,
                      loglik_trace: list | None = None) -> FitResult:
    """Newton-Raphson from theta = 0; ``loglik_trace`` collects the accepted log-likelihoods."""
    n, q = f.shape
    if np.any((y != 0) & (y != 1)):
        raise FitError("logistic responses must be 0 or 1")
    if y.min() == y.max():
        raise SeparationError("all responses are equal; the MLE does not exist")
    theta = np.zeros(q)
    ll = _loglik(f, y, theta)
    if loglik_trace is not None:
        loglik_trace.append(ll)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        pi = logistic(f @ theta)
        score = f.T @ (y - pi)
        if np.linalg.norm(score) <= score_tol:
            converged = True
            break
        info = (f.T * (pi * (1.0 - pi))) @ f
        try:
            step = linalg.solve(0.5 * (info + info.T), score)
        except linalg.SingularMatrixError:
            if is_separated(f, y):
                raise SeparationError("responses are separated; the MLE does not exist") from None
            raise FitError("Fisher information is singular") from None
        t = 1.0
        while True:
            cand = theta + t * step
            ll_new = _loglik(f, y, cand)
            if ll_new >= ll - 1e-12 * abs(ll) or t < 1e-10:
                break
            t *= 0.5
        if ll_new < ll - 1e-12 * abs(ll):
            break
        theta, ll = cand, ll_new
        if loglik_trace is not None:
            loglik_trace.append(ll)
        if np.linalg.norm(theta) > 1e3:
            break
        if np.linalg.norm(t * step) <= 1e-13 * (1.0 + np.linalg.norm(theta)):
            pi = logistic(f @ theta)
            converged = np.linalg.norm(f.T @ (y - pi)) <= 1e-8 * max(n, 1)
            break

    eta = f @ theta
    if not converged or np.linalg.norm(theta) > 1e3 or np.abs(eta).max() > 25.0:
        if is_separated(f, y):
            raise SeparationError("responses are separated; the MLE does not exist")
    if not converged:
        raise FitError(f"Newton-Raphson did not converge in {it} iterations")
    pi = logistic(eta)
    info = (f.T * (pi * (1.0 - pi))) @ f
    try:
        cov = linalg.inv(0.5 * (info + info.T))
    except linalg.SingularMatrixError:
        raise FitError("observed information is singular at the estimate") from None
    return FitResult(theta, cov, True, it)


def logistic_fit(data: Dataset, rows, model: ModelSpec, max_iter: int = 100) -> FitResult:
    """Maximum likelihood by Newton-Raphson with step halving, started at 0.

    Separation (no finite MLE) raises :class:`SeparationError`; other
    non-convergence raises :class:`FitError`.
    """
    if data.response is None:
        raise FitError("dataset has no response column")
    idx = _rows(rows)
    return logistic_features(model.basis.expand(data.covariates[idx]), data.response[idx], max_iter)


def fit(data: Dataset, rows, model: ModelSpec) -> FitResult:
    if model.family is Family.LOGISTIC:
        return logistic_fit(data, rows, model)
    return ols_fit(data, rows, model)


def fit_features(f: np.ndarray, y: np.ndarray, family: Family) -> FitResult:
    if family is Family.LOGISTIC:
        return logistic_features(f, y)
    return ols_features(f, y)
