"""Logistic regression fit by Newton/IRLS with step-halving.

Maximizes the binomial log-likelihood (no regularization) with an
intercept. Iterations stop when the L2 norm of the mean-likelihood
gradient falls below `tol`; under perfect separation the fit stops at the
iteration cap with a warning.
"""
from __future__ import annotations

import warnings

import numpy as np
from scipy.special import expit

from ..dataset import Dataset
from .base import Hyperparams, SoftClassifier


class LogitModel(SoftClassifier):
    kind = "logit"

    def __init__(self, feature_specs, intercept, coef, hp, converged=True):
        super().__init__(feature_specs)
        self.intercept = float(intercept)
        self.coef = np.asarray(coef, dtype=np.float64)
        self.hp = hp
        self.converged = converged

    def _proba_batch(self, X):
        # multiply-and-reduce keeps single-row and batched scores bit-identical
        z = (X * self.coef).sum(axis=1) + self.intercept
        return expit(z)


def _mean_deviance(y, z):
    return float(2.0 * np.mean(np.logaddexp(0.0, z) - y * z))


def fit_logit(train: Dataset, hp: Hyperparams | None = None) -> LogitModel:
    # a one-class response is allowed: the intercept walks toward +/-inf
    # until the iteration cap, leaving a near-degenerate but usable model
    hp = hp or Hyperparams()
    y = train.y.astype(np.float64)
    n, p = train.X.shape
    A = np.column_stack([np.ones(n), train.X])
    beta = np.zeros(p + 1)
    z = A @ beta
    dev = _mean_deviance(y, z)
    converged = False
    for _ in range(hp.logit.max_iter):
        mu = expit(z)
        grad = A.T @ (y - mu) / n
        if np.linalg.norm(grad) < hp.logit.tol:
            converged = True
            break
        w = mu * (1.0 - mu)
        hess = (A * w[:, None]).T @ A / n
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(hess, grad, rcond=None)
        # halve until the deviance stops increasing
        scale = 1.0
        for _ in range(60):
            cand = beta + scale * step
            zc = A @ cand
            dc = _mean_deviance(y, zc)
            if dc <= dev + 1e-15:
                break
            scale *= 0.5
        else:
            converged = True  # no improving direction left
            break
        beta, z, dev = cand, zc, dc
    if not converged:
        warnings.warn("logit did not reach gradient tolerance (perfect separation?); "
                      "stopping at the iteration cap", stacklevel=2)
    return LogitModel(train.specs, beta[0], beta[1:], hp.logit, converged)
