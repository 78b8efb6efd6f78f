"""Shared classifier contract and hyperparameter bundle.

Every learner produces a SoftClassifier: an immutable fitted model whose
`predict_proba` returns the class-1 (switching) probability and whose
`predict_class` takes the argmax, resolving an exact 0.5 tie to class 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MODEL_KINDS = ("logit", "nb", "cart", "bag", "rf", "boost", "nn")

#: Fixed preference order used to break ties in model selection.
SELECTION_ORDER = ("boost", "rf", "bag", "nn", "logit", "nb", "cart")


@dataclass(frozen=True)
class LogitParams:
    max_iter: int = 100
    tol: float = 1e-8

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")


@dataclass(frozen=True)
class NBParams:
    variance_floor: float = 1e-9

    def __post_init__(self):
        if self.variance_floor <= 0:
            raise ValueError("variance_floor must be positive")


@dataclass(frozen=True)
class CartParams:
    min_obs_leaf: int = 10
    max_leaves: int | None = None

    def __post_init__(self):
        if self.min_obs_leaf < 1:
            raise ValueError("min_obs_leaf must be positive")
        if self.max_leaves is not None and self.max_leaves < 1:
            raise ValueError("max_leaves must be positive")


@dataclass(frozen=True)
class BagParams:
    n_trees: int = 500
    min_obs_leaf: int = 10
    bootstrap: bool = True  # test hook; disabling reduces bag(1 tree) to cart

    def __post_init__(self):
        if self.n_trees < 1 or self.min_obs_leaf < 1:
            raise ValueError("counts must be positive")


@dataclass(frozen=True)
class RFParams:
    n_trees: int = 600
    mtry: int = 14
    min_obs_leaf: int = 10

    def __post_init__(self):
        if self.n_trees < 1 or self.mtry < 1 or self.min_obs_leaf < 1:
            raise ValueError("counts must be positive")


@dataclass(frozen=True)
class BoostParams:
    n_trees: int = 500
    shrinkage: float = 0.062
    interaction_depth: int = 45  # maximum number of splits per tree
    min_obs_leaf: int = 10

    def __post_init__(self):
        if self.n_trees < 1 or self.interaction_depth < 1 or self.min_obs_leaf < 1:
            raise ValueError("counts must be positive")
        if not 0.0 < self.shrinkage <= 1.0:
            raise ValueError("shrinkage must lie in (0, 1]")


@dataclass(frozen=True)
class NNParams:
    hidden_units: int = 14
    weight_decay: float = 0.1
    learning_rate: float = 1.0
    max_iter: int = 100
    tol: float = 1e-6

    def __post_init__(self):
        if self.hidden_units < 1:
            raise ValueError("hidden_units must be positive")
        if self.learning_rate <= 0 or self.max_iter < 1:
            raise ValueError("learning_rate and max_iter must be positive")


@dataclass(frozen=True)
class Hyperparams:
    """Per-kind hyperparameters; defaults follow the study configuration."""

    logit: LogitParams = field(default_factory=LogitParams)
    nb: NBParams = field(default_factory=NBParams)
    cart: CartParams = field(default_factory=CartParams)
    bag: BagParams = field(default_factory=BagParams)
    rf: RFParams = field(default_factory=RFParams)
    boost: BoostParams = field(default_factory=BoostParams)
    nn: NNParams = field(default_factory=NNParams)


class SoftClassifier:
    """Base for fitted models exposing class-1 probability prediction."""

    kind: str = ""

    def __init__(self, feature_specs):
        self.feature_specs = tuple(feature_specs)

    @property
    def n_features(self) -> int:
        return len(self.feature_specs)

    def _proba_batch(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _as_batch(self, X):
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X.reshape(1, -1)
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        return np.ascontiguousarray(X), single

    def predict_proba(self, X):
        """Class-1 probability for one row (float) or a matrix (vector)."""
        batch, single = self._as_batch(X)
        probs = self._proba_batch(batch)
        return float(probs[0]) if single else probs

    def predict_class(self, X):
        """Argmax class; an exact tie (probability 0.5) resolves to class 1."""
        probs = self.predict_proba(X)
        if np.isscalar(probs):
            return int(probs >= 0.5)
        return (probs >= 0.5).astype(np.int64)
