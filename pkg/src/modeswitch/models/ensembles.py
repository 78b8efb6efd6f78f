"""Bootstrap tree ensembles: bagging and random forests.

Both draw `n_trees` bootstrap resamples (size N, with replacement) and grow
one unpruned classification tree per resample; the predicted probability is
the mean of the per-tree leaf probabilities. The only difference is that a
random forest evaluates a fresh uniform subset of `mtry` features at every
split. With mtry = p the feature subset covers everything, so a forest and
a bagger given the same seed produce identical trees.

Randomness: one PCG64 generator seeded from `seed` supplies, per tree, the
bootstrap indices and then a 64-bit kernel seed (consumed by the in-kernel
feature subsampler only when mtry < p), so bag and rf share draw order.
"""
from __future__ import annotations

import numpy as np

from ..dataset import Dataset
from . import _grower
from .base import Hyperparams, SoftClassifier
from .trees import Tree, flatten_trees


class ForestModel(SoftClassifier):
    def __init__(self, feature_specs, trees, hp):
        super().__init__(feature_specs)
        self.trees = list(trees)
        self.hp = hp
        self._flat = flatten_trees(self.trees)

    def _proba_batch(self, X):
        out = np.zeros(X.shape[0], dtype=np.float64)
        feat, thr, left, right, value, off = self._flat
        _grower.accumulate_forest(feat, thr, left, right, value, off, X, 1.0, out)
        out /= len(self.trees)
        return out


class BagModel(ForestModel):
    kind = "bag"


class RFModel(ForestModel):
    kind = "rf"


def _fit_forest(train: Dataset, n_trees, mtry, min_obs_leaf, seed, bootstrap):
    n, p = train.X.shape
    codes_t, starts, vals = _grower.prebin(train.X)
    y = train.y.astype(np.float64)
    ones = np.ones(n)
    all_rows = np.arange(n, dtype=np.int32)
    rng = np.random.Generator(np.random.PCG64(seed))
    row_value = np.zeros(n)
    trees = []
    for _ in range(n_trees):
        if bootstrap:
            counts = np.bincount(rng.integers(0, n, n), minlength=n).astype(np.float64)
            rows = np.nonzero(counts)[0].astype(np.int32)
        else:
            counts, rows = ones, all_rows.copy()
        kernel_seed = _grower.U64(rng.integers(0, 2 ** 64, dtype=np.uint64))
        out = _grower.grow_tree(codes_t, starts, vals, counts, y, ones, rows,
                                float(min_obs_leaf), -1, mtry, kernel_seed,
                                0, True, row_value)
        trees.append(Tree(*out[:5]))
    return trees


def fit_bag(train: Dataset, hp: Hyperparams | None = None, seed: int = 0) -> BagModel:
    """Bagged unpruned classification trees."""
    hp = hp or Hyperparams()
    trees = _fit_forest(train, hp.bag.n_trees, train.n_features,
                        hp.bag.min_obs_leaf, seed, hp.bag.bootstrap)
    return BagModel(train.specs, trees, hp.bag)


def fit_rf(train: Dataset, hp: Hyperparams | None = None, seed: int = 0) -> RFModel:
    """Random forest: bagging plus per-split feature subsampling."""
    hp = hp or Hyperparams()
    if hp.rf.mtry > train.n_features:
        raise ValueError(f"mtry={hp.rf.mtry} exceeds the number of features "
                         f"({train.n_features})")
    trees = _fit_forest(train, hp.rf.n_trees, hp.rf.mtry,
                        hp.rf.min_obs_leaf, seed, bootstrap=True)
    return RFModel(train.specs, trees, hp.rf)
