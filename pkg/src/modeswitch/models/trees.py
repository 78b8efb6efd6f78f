"""Classification tree (CART) grown by greedy Gini splitting.

Candidate thresholds are midpoints between consecutive distinct observed
values of a feature within the node; the split minimizing the weighted
Gini impurity wins, with ties broken toward the lowest feature index and
then the lowest threshold. Growth stops at node purity, at `min_obs_leaf`,
at `max_leaves`, or when no split strictly improves the impurity. Leaves
score the weighted class-1 fraction of their rows.
"""
from __future__ import annotations

import numpy as np

from ..dataset import Dataset
from . import _grower
from .base import Hyperparams, SoftClassifier


class Tree:
    """Array-encoded binary tree: feature[i] < 0 marks node i as a leaf.

    Internal nodes route rows with x[feature] <= threshold to `left`.
    """

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int32)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int32)
        self.right = np.asarray(right, dtype=np.int32)
        self.value = np.asarray(value, dtype=np.float64)

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        out = np.zeros(X.shape[0], dtype=np.float64)
        off = np.zeros(2, dtype=np.int64)
        off[1] = self.n_nodes
        _grower.accumulate_forest(self.feature, self.threshold, self.left,
                                  self.right, self.value, off,
                                  np.ascontiguousarray(X, dtype=np.float64), 1.0, out)
        return out

    def to_doc(self) -> dict:
        return {"feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
                "left": self.left.tolist(), "right": self.right.tolist(),
                "value": self.value.tolist()}

    @classmethod
    def from_doc(cls, doc: dict) -> "Tree":
        return cls(doc["feature"], doc["threshold"], doc["left"], doc["right"],
                   doc["value"])


def flatten_trees(trees):
    """Concatenate tree arrays for the forest kernel; returns arrays + offsets."""
    off = np.zeros(len(trees) + 1, dtype=np.int64)
    for i, t in enumerate(trees):
        off[i + 1] = off[i] + t.n_nodes
    feat = np.concatenate([t.feature for t in trees])
    thr = np.concatenate([t.threshold for t in trees])
    left = np.concatenate([t.left for t in trees])
    right = np.concatenate([t.right for t in trees])
    value = np.concatenate([t.value for t in trees])
    return feat, thr, left, right, value, off


def grow_classification_tree(codes_t, bin_starts, bin_vals, w, y, rows,
                             min_obs_leaf, max_leaves=None) -> Tree:
    max_splits = -1 if max_leaves is None else max_leaves - 1
    row_value = np.zeros(w.shape[0], dtype=np.float64)
    out = _grower.grow_tree(codes_t, bin_starts, bin_vals, w,
                            np.asarray(y, dtype=np.float64), np.ones_like(w),
                            rows, float(min_obs_leaf), max_splits,
                            codes_t.shape[0], _grower.U64(0), 0, True, row_value)
    return Tree(*out[:5])


class CartModel(SoftClassifier):
    kind = "cart"

    def __init__(self, feature_specs, tree: Tree, hp):
        super().__init__(feature_specs)
        self.tree = tree
        self.hp = hp

    def _proba_batch(self, X):
        return self.tree.predict_value(X)


def fit_cart(train: Dataset, hp: Hyperparams | None = None) -> CartModel:
    """Grow one unpruned classification tree on the training data."""
    hp = hp or Hyperparams()
    codes_t, starts, vals = _grower.prebin(train.X)
    n = train.n_rows
    tree = grow_classification_tree(codes_t, starts, vals, np.ones(n), train.y,
                                    np.arange(n, dtype=np.int32),
                                    hp.cart.min_obs_leaf, hp.cart.max_leaves)
    return CartModel(train.specs, tree, hp.cart)
