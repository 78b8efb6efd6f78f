"""Versioned JSON serialization for fitted models.

The document records the model kind, its hyperparameters, the training
feature specs, and all fitted parameters. Floats survive the round trip
exactly (shortest-repr encoding), so a saved-and-reloaded model predicts
bit-identically.
"""
from __future__ import annotations

import json
from dataclasses import asdict

import numpy as np

from ..dataset import FeatureSpec
from .base import (BagParams, BoostParams, CartParams, LogitParams, NBParams,
                   NNParams, RFParams)
from .boosting import BoostModel
from .ensembles import BagModel, RFModel
from .linear import LogitModel
from .naive_bayes import NaiveBayesModel
from .neural import NNModel
from .trees import CartModel, Tree

FORMAT = "modeswitch-model"
VERSION = 1

_PARAM_TYPES = {"logit": LogitParams, "nb": NBParams, "cart": CartParams,
                "bag": BagParams, "rf": RFParams, "boost": BoostParams,
                "nn": NNParams}


def _specs_doc(specs):
    return [asdict(s) for s in specs]


def _specs_from_doc(doc):
    return tuple(FeatureSpec(**d) for d in doc)


def _nb_features_doc(features):
    out = []
    for f in features:
        d = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in f.items()}
        out.append(d)
    return out


def _nb_features_from_doc(doc):
    out = []
    for d in doc:
        f = dict(d)
        for k in ("mean", "var", "theta", "categories", "probs"):
            if k in f:
                f[k] = np.asarray(f[k], dtype=np.float64)
        out.append(f)
    return out


def model_to_doc(model) -> dict:
    kind = model.kind
    doc = {"format": FORMAT, "version": VERSION, "kind": kind,
           "hyperparams": asdict(model.hp),
           "feature_specs": _specs_doc(model.feature_specs)}
    if kind == "logit":
        doc["params"] = {"intercept": model.intercept, "coef": model.coef.tolist(),
                         "converged": model.converged}
    elif kind == "nb":
        doc["params"] = {"priors": model.priors.tolist(),
                         "features": _nb_features_doc(model.features)}
    elif kind == "cart":
        doc["params"] = {"tree": model.tree.to_doc()}
    elif kind in ("bag", "rf"):
        doc["params"] = {"trees": [t.to_doc() for t in model.trees]}
    elif kind == "boost":
        doc["params"] = {"init_score": model.init_score,
                         "trees": [t.to_doc() for t in model.trees],
                         "train_deviance": model.train_deviance.tolist()}
    elif kind == "nn":
        doc["params"] = {"theta": model.theta.tolist(),
                         "x_mean": model.x_mean.tolist(),
                         "x_sd": model.x_sd.tolist(), "n_iter": model.n_iter}
    else:
        raise ValueError(f"cannot serialize model kind {kind!r}")
    return doc


def model_from_doc(doc: dict):
    if doc.get("format") != FORMAT:
        raise ValueError("not a model document")
    if doc.get("version") != VERSION:
        raise ValueError(f"unsupported model document version {doc.get('version')}")
    kind = doc["kind"]
    specs = _specs_from_doc(doc["feature_specs"])
    hp = _PARAM_TYPES[kind](**doc["hyperparams"])
    p = doc["params"]
    if kind == "logit":
        return LogitModel(specs, p["intercept"], p["coef"], hp, p["converged"])
    if kind == "nb":
        return NaiveBayesModel(specs, np.asarray(p["priors"]),
                               _nb_features_from_doc(p["features"]), hp)
    if kind == "cart":
        return CartModel(specs, Tree.from_doc(p["tree"]), hp)
    if kind == "bag":
        return BagModel(specs, [Tree.from_doc(t) for t in p["trees"]], hp)
    if kind == "rf":
        return RFModel(specs, [Tree.from_doc(t) for t in p["trees"]], hp)
    if kind == "boost":
        return BoostModel(specs, p["init_score"], [Tree.from_doc(t) for t in p["trees"]],
                          hp, p["train_deviance"])
    if kind == "nn":
        return NNModel(specs, p["theta"], p["x_mean"], p["x_sd"], hp, p["n_iter"])
    raise ValueError(f"unknown model kind {kind!r}")


def model_to_json(model) -> str:
    return json.dumps(model_to_doc(model), sort_keys=True)


def model_from_json(text: str):
    return model_from_doc(json.loads(text))


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model_to_json(model))


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_json(fh.read())
