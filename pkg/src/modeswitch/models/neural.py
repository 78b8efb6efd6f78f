"""Single-hidden-layer neural network trained by full-batch gradient descent.

Architecture: z-scored inputs -> `hidden_units` sigmoid units -> sigmoid
output. The objective is the mean cross-entropy plus weight_decay/N times
the squared L2 norm of all parameters (the summed-loss decay convention,
so the decay constant keeps its usual meaning). Descent uses a fixed base
step with step-halving whenever a step would increase the objective, so
the objective is non-increasing over accepted steps. Training stops when
the gradient norm drops below `tol`, when no halved step improves, or at
`max_iter`.

Weights initialize uniformly in [-0.5, 0.5] from a PCG64 generator.
"""
from __future__ import annotations

import numpy as np
from scipy.special import expit

from ..dataset import Dataset
from .base import Hyperparams, SoftClassifier


def pack_shapes(n_inputs: int, n_hidden: int):
    return ((n_hidden, n_inputs), (n_hidden,), (n_hidden,), ())


def unpack(theta: np.ndarray, n_inputs: int, n_hidden: int):
    w1 = theta[:n_hidden * n_inputs].reshape(n_hidden, n_inputs)
    o = n_hidden * n_inputs
    b1 = theta[o:o + n_hidden]
    w2 = theta[o + n_hidden:o + 2 * n_hidden]
    b2 = theta[-1]
    return w1, b1, w2, b2


def objective(theta, Xs, y, n_hidden, weight_decay):
    """Penalized loss and analytic gradient at `theta`."""
    n, p = Xs.shape
    w1, b1, w2, b2 = unpack(theta, p, n_hidden)
    z1 = Xs @ w1.T + b1
    a1 = expit(z1)
    z2 = a1 @ w2 + b2
    ce = float(np.mean(np.logaddexp(0.0, z2) - y * z2))
    loss = ce + weight_decay / n * float(theta @ theta)
    if not np.isfinite(loss):
        raise FloatingPointError(
            f"non-finite NN loss (ce={ce}, |theta|={np.abs(theta).max()})")
    d2 = (expit(z2) - y) / n
    gw2 = a1.T @ d2
    gb2 = d2.sum()
    d1 = (d2[:, None] * w2[None, :]) * a1 * (1.0 - a1)
    gw1 = d1.T @ Xs
    gb1 = d1.sum(axis=0)
    grad = np.concatenate([gw1.ravel(), gb1, gw2, [gb2]])
    grad += (2.0 * weight_decay / n) * theta
    return loss, grad


class NNModel(SoftClassifier):
    kind = "nn"

    def __init__(self, feature_specs, theta, x_mean, x_sd, hp, n_iter=0):
        super().__init__(feature_specs)
        self.theta = np.asarray(theta, dtype=np.float64)
        self.x_mean = np.asarray(x_mean, dtype=np.float64)
        self.x_sd = np.asarray(x_sd, dtype=np.float64)
        self.hp = hp
        self.n_iter = n_iter

    def _proba_batch(self, X):
        Xs = (X - self.x_mean) / self.x_sd
        w1, b1, w2, b2 = unpack(self.theta, X.shape[1], self.hp.hidden_units)
        return expit(expit(Xs @ w1.T + b1) @ w2 + b2)


def fit_nn(train: Dataset, hp: Hyperparams | None = None, seed: int = 0) -> NNModel:
    hp = hp or Hyperparams()
    np_ = hp.nn
    X = train.X
    y = train.y.astype(np.float64)
    x_mean = X.mean(axis=0)
    x_sd = X.std(axis=0)
    x_sd = np.where(x_sd > 0.0, x_sd, 1.0)  # constant columns map to 0
    Xs = (X - x_mean) / x_sd

    n_theta = sum(int(np.prod(s)) if s else 1
                  for s in pack_shapes(X.shape[1], np_.hidden_units))
    rng = np.random.Generator(np.random.PCG64(seed))
    theta = rng.uniform(-0.5, 0.5, n_theta)

    loss, grad = objective(theta, Xs, y, np_.hidden_units, np_.weight_decay)
    it = 0
    for it in range(1, np_.max_iter + 1):
        if np.linalg.norm(grad) < np_.tol:
            break
        step = np_.learning_rate
        accepted = False
        for _ in range(60):
            cand = theta - step * grad
            cand_loss, cand_grad = objective(cand, Xs, y, np_.hidden_units,
                                             np_.weight_decay)
            if cand_loss <= loss:
                theta, loss, grad = cand, cand_loss, cand_grad
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break  # stalled: no step length improves
    return NNModel(train.specs, theta, x_mean, x_sd, np_, it)
