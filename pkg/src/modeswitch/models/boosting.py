"""Stagewise gradient boosting on binomial deviance.

The score starts at the log-odds of the training base rate. Each stage fits
a regression tree (at most `interaction_depth` splits, at least
`min_obs_leaf` observations per leaf) to the negative gradient y - p, sets
leaf values by a single Newton step sum(y - p) / sum(p (1 - p)), and adds
the tree scaled by `shrinkage`. A stage whose tree cannot split contributes
exactly zero but still counts toward `n_trees`.

Predicted probability is the logistic of the staged score; scores
accumulate stage by stage in both fitting and prediction, so the staged
additivity F_m(x) = F_{m-1}(x) + shrinkage * tree_m(x) is exact.
"""
from __future__ import annotations

import numpy as np
from scipy.special import expit

from ..dataset import Dataset
from . import _grower
from .base import Hyperparams, SoftClassifier
from .trees import Tree, flatten_trees


def binomial_deviance(y: np.ndarray, score: np.ndarray) -> float:
    """Mean binomial deviance of log-odds scores: 2 * mean(log(1+e^F) - y*F)."""
    return float(2.0 * np.mean(np.logaddexp(0.0, score) - y * score))


class BoostModel(SoftClassifier):
    kind = "boost"

    def __init__(self, feature_specs, init_score, trees, hp, train_deviance):
        super().__init__(feature_specs)
        self.init_score = float(init_score)
        self.trees = list(trees)
        self.hp = hp
        self.train_deviance = np.asarray(train_deviance, dtype=np.float64)
        self._flat = flatten_trees(self.trees) if self.trees else None

    def decision_function(self, X, n_stages: int | None = None) -> np.ndarray:
        """Staged log-odds score after `n_stages` trees (default: all)."""
        X, _ = self._as_batch(X)
        out = np.full(X.shape[0], self.init_score)
        if n_stages is None:
            n_stages = len(self.trees)
        if n_stages > 0:
            feat, thr, left, right, value, off = self._flat
            _grower.accumulate_forest(feat, thr, left, right, value,
                                      off[:n_stages + 1], X,
                                      self.hp.shrinkage, out)
        return out

    def _proba_batch(self, X):
        return expit(self.decision_function(X))


def fit_boost(train: Dataset, hp: Hyperparams | None = None) -> BoostModel:
    """Gradient-boosted trees on binomial deviance."""
    hp = hp or Hyperparams()
    bp = hp.boost
    y = train.y.astype(np.float64)
    base = float(y.mean())
    if base in (0.0, 1.0):
        raise ValueError("boosting requires both classes in the training data")
    n = train.n_rows
    codes_t, starts, vals = _grower.prebin(train.X)
    ones = np.ones(n)
    score = np.full(n, np.log(base / (1.0 - base)))
    init = score[0]
    trees = []
    deviance = [binomial_deviance(y, score)]
    row_value = np.zeros(n)
    for _ in range(bp.n_trees):
        p = expit(score)
        grad = y - p
        hess = p * (1.0 - p)
        rows = np.arange(n, dtype=np.int32)
        out = _grower.grow_tree(codes_t, starts, vals, ones, grad, hess, rows,
                                float(bp.min_obs_leaf), bp.interaction_depth,
                                train.n_features, _grower.U64(0), 1, False,
                                row_value)
        trees.append(Tree(*out[:5]))
        score += bp.shrinkage * row_value
        deviance.append(binomial_deviance(y, score))
    return BoostModel(train.specs, init, trees, bp, deviance)
