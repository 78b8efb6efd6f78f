"""Accuracy and market-share metrics, segment reports, cross-validation.

Individual accuracy is the fraction of argmax predictions matching the
observed decision; aggregate accuracy compares soft market shares (mean
predicted probabilities) against observed shares through an L1 norm.
Cross-validation shares one fold partition across all model kinds and
selects the kind with the best mean fold accuracy.
"""
from __future__ import annotations

import csv
import io as _io
import json
import zlib
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, kfold_partition
from .models import Hyperparams, SELECTION_ORDER, fit


def accuracy(truth, predicted) -> float:
    """Share of predictions equal to the truth."""
    truth = np.asarray(truth)
    predicted = np.asarray(predicted)
    if truth.shape != predicted.shape:
        raise ValueError("truth and prediction lengths differ")
    if truth.size == 0:
        raise ValueError("empty vectors")
    return float(np.mean(truth == predicted))


def market_share(probs) -> tuple[float, float]:
    """Soft market shares (Q0, Q1): Q1 averages the class-1 probabilities."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.size == 0:
        raise ValueError("empty probability vector")
    if probs.min() < 0.0 or probs.max() > 1.0:
        raise ValueError("probabilities outside [0, 1]")
    q1 = float(np.mean(probs))
    return (1.0 - q1, q1)


def l1_norm(observed, predicted) -> float:
    """Sum of absolute market-share deviations over the two classes."""
    for pair in (observed, predicted):
        if abs(sum(pair) - 1.0) > 1e-9:
            raise ValueError(f"market shares {pair} do not sum to 1")
    return float(abs(observed[0] - predicted[0]) + abs(observed[1] - predicted[1]))


@dataclass(frozen=True)
class MetricReport:
    """Individual and aggregate predictive accuracy for one population."""

    n: int
    overall_accuracy: float
    true_positive_rate: float | None  # accuracy on observed switchers
    true_negative_rate: float | None
    market_share_obs: tuple[float, float]
    market_share_pred: tuple[float, float]
    l1_norm: float

    def to_doc(self) -> dict:
        return {
            "n": self.n, "overall_accuracy": self.overall_accuracy,
            "true_positive_rate": self.true_positive_rate,
            "true_negative_rate": self.true_negative_rate,
            "market_share_obs": list(self.market_share_obs),
            "market_share_pred": list(self.market_share_pred),
            "l1_norm": self.l1_norm,
        }


def _report(y, probs, classes) -> MetricReport:
    obs = market_share(y.astype(np.float64))
    pred = market_share(probs)
    pos = y == 1
    neg = ~pos
    return MetricReport(
        n=int(y.size),
        overall_accuracy=accuracy(y, classes),
        true_positive_rate=accuracy(y[pos], classes[pos]) if pos.any() else None,
        true_negative_rate=accuracy(y[neg], classes[neg]) if neg.any() else None,
        market_share_obs=obs, market_share_pred=pred,
        l1_norm=l1_norm(obs, pred),
    )


def segment_report(model, test: Dataset) -> dict[str, MetricReport | None]:
    """MetricReport for the whole test set and per current-mode segment.

    Empty segments map to None rather than zero-filled reports. Segment L1
    norms use segment-level shares.
    """
    probs = model.predict_proba(test.X)
    classes = (probs >= 0.5).astype(np.int64)
    reports: dict[str, MetricReport | None] = {"All": _report(test.y, probs, classes)}
    modes = test.current_mode()
    for mode in test.mode_names():
        mask = modes == mode
        if not mask.any():
            reports[mode] = None
            continue
        reports[mode] = _report(test.y[mask], probs[mask], classes[mask])
    return reports


@dataclass(frozen=True)
class CVReport:
    """Per-kind fold accuracies, their means, and the selected kind."""

    k: int
    seed: int
    fold_accuracies: dict[str, tuple[float, ...]]
    mean_accuracy: dict[str, float]
    selected_model: str

    def to_doc(self) -> dict:
        return {
            "k": self.k, "seed": self.seed,
            "fold_accuracies": {m: list(v) for m, v in self.fold_accuracies.items()},
            "mean_accuracy": self.mean_accuracy,
            "selected_model": self.selected_model,
        }


def fold_model_seed(seed: int, kind: str, fold: int) -> int:
    """Seed for the model fitted with `fold` held out (PCG64 SeedSequence
    spawn keyed by kind and fold; reproducible for replay tests)."""
    ss = np.random.SeedSequence(seed, spawn_key=(zlib.crc32(kind.encode()), fold))
    return int(ss.generate_state(1, np.uint64)[0])


def select_model(mean_accuracy: dict[str, float] | CVReport) -> str:
    """Kind with the highest mean accuracy; ties break by the fixed order
    boost, rf, bag, nn, logit, nb, cart."""
    means = mean_accuracy.mean_accuracy if isinstance(mean_accuracy, CVReport) \
        else mean_accuracy
    if not means:
        raise ValueError("empty report")
    ranked = sorted(means, key=lambda m: (-means[m], _selection_rank(m)))
    return ranked[0]


def _selection_rank(kind: str) -> int:
    return SELECTION_ORDER.index(kind) if kind in SELECTION_ORDER else len(SELECTION_ORDER)


def cross_validate(train: Dataset, k: int, model_kinds, seed: int,
                   hp: Hyperparams | None = None) -> CVReport:
    """k-fold cross-validation with one shared random fold partition.

    Each kind is fitted on k-1 folds and scored by individual accuracy on
    the held-out fold; per-fit seeds derive from (seed, kind, fold).
    """
    model_kinds = list(model_kinds)
    if not model_kinds:
        raise ValueError("no model kinds given")
    folds = kfold_partition(train, k, seed)
    all_idx = np.arange(train.n_rows)
    fold_acc: dict[str, list[float]] = {m: [] for m in model_kinds}
    for fold_idx, held_out in enumerate(folds):
        fit_rows = np.setdiff1d(all_idx, held_out, assume_unique=True)
        sub_train = train.subset(fit_rows)
        sub_test = train.subset(held_out)
        for kind in model_kinds:
            model = fit(kind, sub_train, hp, fold_model_seed(seed, kind, fold_idx))
            fold_acc[kind].append(accuracy(sub_test.y, model.predict_class(sub_test.X)))
    means = {m: float(np.mean(v)) for m, v in fold_acc.items()}
    report = CVReport(k=k, seed=seed,
                      fold_accuracies={m: tuple(v) for m, v in fold_acc.items()},
                      mean_accuracy=means, selected_model=select_model(means))
    return report


# --- exports ----------------------------------------------------------------

def cv_report_json(report: CVReport) -> str:
    return json.dumps(report.to_doc(), indent=2, sort_keys=True)


def cv_report_csv(report: CVReport) -> str:
    """Flat CSV: one row per model x fold plus summary rows."""
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["model", "fold", "accuracy"])
    for kind, accs in report.fold_accuracies.items():
        for i, a in enumerate(accs):
            writer.writerow([kind, i, repr(a)])
    for kind, mean in report.mean_accuracy.items():
        writer.writerow([kind, "mean", repr(mean)])
    writer.writerow([report.selected_model, "selected", ""])
    return buf.getvalue()


def segment_report_json(reports: dict[str, MetricReport | None]) -> str:
    doc = {seg: (r.to_doc() if r is not None else None) for seg, r in reports.items()}
    return json.dumps(doc, indent=2, sort_keys=True)


def segment_report_csv(reports: dict[str, MetricReport | None]) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["segment", "n", "overall_accuracy", "true_positive_rate",
                     "true_negative_rate", "share_obs_1", "share_pred_1", "l1_norm"])
    for seg, r in reports.items():
        if r is None:
            writer.writerow([seg, 0, "", "", "", "", "", ""])
            continue
        writer.writerow([
            seg, r.n, repr(r.overall_accuracy),
            "" if r.true_positive_rate is None else repr(r.true_positive_rate),
            "" if r.true_negative_rate is None else repr(r.true_negative_rate),
            repr(r.market_share_obs[1]), repr(r.market_share_pred[1]),
            repr(r.l1_norm)])
    return buf.getvalue()
