"""The seven soft classifiers behind one probability-prediction contract."""
from __future__ import annotations

from ..dataset import Dataset
from .base import (BagParams, BoostParams, CartParams, Hyperparams, LogitParams,
                   MODEL_KINDS, NBParams, NNParams, RFParams, SELECTION_ORDER,
                   SoftClassifier)
from .boosting import BoostModel, binomial_deviance, fit_boost
from .ensembles import BagModel, RFModel, fit_bag, fit_rf
from .io import (load_model, model_from_doc, model_from_json, model_to_doc,
                 model_to_json, save_model)
from .linear import LogitModel, fit_logit
from .naive_bayes import NaiveBayesModel, fit_nb
from .neural import NNModel, fit_nn
from .trees import CartModel, Tree, fit_cart

_SEEDED = {"bag", "rf", "nn"}


def fit(kind: str, train: Dataset, hp: Hyperparams | None = None,
        seed: int = 0) -> SoftClassifier:
    """Fit one model by kind name; `seed` matters only for bag, rf and nn."""
    if kind == "logit":
        return fit_logit(train, hp)
    if kind == "nb":
        return fit_nb(train, hp)
    if kind == "cart":
        return fit_cart(train, hp)
    if kind == "bag":
        return fit_bag(train, hp, seed)
    if kind == "rf":
        return fit_rf(train, hp, seed)
    if kind == "boost":
        return fit_boost(train, hp)
    if kind == "nn":
        return fit_nn(train, hp, seed)
    raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")


def predict_proba(model: SoftClassifier, row):
    """Class-1 probability of `row` under `model` (p0 is 1 minus this)."""
    return model.predict_proba(row)


def predict_class(model: SoftClassifier, row):
    """Argmax class for `row`; an exact 0.5 tie resolves to class 1."""
    return model.predict_class(row)


__all__ = [
    "BagModel", "BagParams", "BoostModel", "BoostParams", "CartModel",
    "CartParams", "Dataset", "Hyperparams", "LogitModel", "LogitParams",
    "MODEL_KINDS", "NBParams", "NNModel", "NNParams", "NaiveBayesModel",
    "RFModel", "RFParams", "SELECTION_ORDER", "SoftClassifier", "Tree",
    "binomial_deviance", "fit", "fit_bag", "fit_boost", "fit_cart", "fit_logit",
    "fit_nb", "fit_nn", "fit_rf", "load_model", "model_from_doc",
    "model_from_json", "model_to_doc", "model_to_json", "predict_class",
    "predict_proba", "save_model",
]
