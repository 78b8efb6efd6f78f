"""Naive Bayes with per-kind class-conditional likelihoods.

Continuous features get Gaussian conditionals (variance floored), binary
features Bernoulli, and discrete-ordinal features categorical over the
training categories. Estimates are unsmoothed empirical frequencies, so a
category unseen within one class makes that class impossible for matching
rows. Rows whose likelihood vanishes under both classes fall back to the
class priors; categorical values never seen in training contribute nothing.
"""
from __future__ import annotations

import numpy as np
from scipy.special import expit

from ..dataset import Dataset
from .base import Hyperparams, SoftClassifier

_GAUSS_CONST = 0.5 * np.log(2.0 * np.pi)


class NaiveBayesModel(SoftClassifier):
    kind = "nb"

    def __init__(self, feature_specs, priors, features, hp):
        super().__init__(feature_specs)
        self.priors = np.asarray(priors, dtype=np.float64)  # (pi0, pi1)
        self.features = features  # per-feature parameter dicts
        self.hp = hp

    def _loglik(self, X, cls):
        total = np.zeros(X.shape[0])
        with np.errstate(divide="ignore"):
            for j, f in enumerate(self.features):
                x = X[:, j]
                if f["dist"] == "gaussian":
                    mu, var = f["mean"][cls], f["var"][cls]
                    total += -_GAUSS_CONST - 0.5 * np.log(var) - (x - mu) ** 2 / (2.0 * var)
                elif f["dist"] == "bernoulli":
                    theta = f["theta"][cls]
                    total += np.where(x == 1.0, np.log(theta), np.log(1.0 - theta))
                else:
                    cats = f["categories"]
                    idx = np.searchsorted(cats, x)
                    idx_c = np.minimum(idx, cats.size - 1)
                    known = cats[idx_c] == x
                    logp = np.log(f["probs"][cls])
                    total += np.where(known, logp[idx_c], 0.0)
        return total

    def _proba_batch(self, X):
        with np.errstate(divide="ignore"):
            a0 = np.log(self.priors[0]) + self._loglik(X, 0)
            a1 = np.log(self.priors[1]) + self._loglik(X, 1)
        with np.errstate(invalid="ignore"):
            post = expit(a1 - a0)
        return np.where(np.isnan(post), self.priors[1], post)


def fit_nb(train: Dataset, hp: Hyperparams | None = None) -> NaiveBayesModel:
    hp = hp or Hyperparams()
    floor = hp.nb.variance_floor
    y = train.y
    if y.min() == y.max():
        raise ValueError("naive Bayes requires both classes in the training data")
    masks = (y == 0, y == 1)
    priors = np.array([m.mean() for m in masks])
    features = []
    for j, spec in enumerate(train.specs):
        col = train.X[:, j]
        if spec.kind == "continuous":
            features.append({
                "dist": "gaussian",
                "mean": np.array([col[m].mean() for m in masks]),
                "var": np.array([max(float(col[m].var()), floor) for m in masks]),
            })
        elif spec.kind == "binary":
            features.append({
                "dist": "bernoulli",
                "theta": np.array([col[m].mean() for m in masks]),
            })
        else:
            cats = np.unique(col)
            probs = []
            for m in masks:
                counts = (col[m][:, None] == cats[None, :]).sum(axis=0)
                probs.append(counts / counts.sum())
            features.append({"dist": "categorical", "categories": cats,
                             "probs": np.array(probs)})
    return NaiveBayesModel(train.specs, priors, features, hp.nb)
