"""Model-agnostic interpretation: curve families and perturbation effects.

ICE traces one prediction-versus-feature curve per instance by sweeping a
grid over one feature while holding everything else at the instance's
values; the PDP is the pointwise mean of those curves. Conditioning both
tools on a segment (one or more feature values, e.g. a current-mode
indicator) yields the CIPDP and CPDP, which expose response heterogeneity
across market segments. Centering subtracts each curve's value at an
anchor grid point so slopes can be compared independently of levels.

Marginal effects and arc elasticities perturb a feature by +/- delta
(units, or a fraction for elasticities) and report the change in the soft
market share, restricted to instances whose perturbed value stays inside
the feature's observed range (tree-based models cannot respond to values
outside the data).
"""
from __future__ import annotations

import csv
import io as _io
import json
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .evaluate import market_share
from .models import SoftClassifier

DEFAULT_GRID_POINTS = 50
LEVEL_OF_SERVICE = ("TT_MOD", "Wait_Time", "Transfer", "Rideshare")


@dataclass(frozen=True)
class Grid:
    """Ascending evaluation points for one feature."""

    feature: str
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.size == 0:
            raise ValueError("empty grid")
        if np.any(np.diff(v) < 0):
            raise ValueError("grid values must ascend")
        object.__setattr__(self, "values", v)

    @property
    def n_points(self) -> int:
        return self.values.size


def make_grid(data: Dataset, feature: str, n_points: int = DEFAULT_GRID_POINTS) -> Grid:
    """Equally spaced grid over the observed range for continuous features;
    the observed unique values for discrete and binary features."""
    spec = data.spec(feature)
    if spec.kind == "continuous":
        values = np.linspace(spec.observed_min, spec.observed_max, n_points)
    else:
        values = np.unique(data.column(feature))
    return Grid(feature, values)


@dataclass(frozen=True)
class Condition:
    """Conjunction of (feature, value) requirements selecting a segment."""

    terms: tuple[tuple[str, float], ...]
    label: str = ""

    @classmethod
    def equals(cls, feature: str, value: float, label: str = "") -> "Condition":
        return cls(((feature, float(value)),), label or f"{feature}={value:g}")

    def mask(self, data: Dataset) -> np.ndarray:
        m = np.ones(data.n_rows, dtype=bool)
        for feature, value in self.terms:
            m &= data.column(feature) == value
        return m

    def describe(self) -> str:
        return self.label or " & ".join(f"{f}={v:g}" for f, v in self.terms)


def mode_condition(data: Dataset, mode: str) -> Condition:
    """Condition selecting one current-mode segment; the residual mode pins
    every indicator to zero."""
    names = data.mode_names()
    if mode not in names:
        raise ValueError(f"unknown mode {mode!r}; expected one of {names}")
    if mode == names[-1]:
        terms = tuple((key, 0.0) for key in data.segment_keys)
    else:
        terms = ((data.segment_keys[names.index(mode)], 1.0),)
    return Condition(terms, label=mode)


@dataclass(frozen=True)
class CurveFamily:
    """Per-instance curves over a grid plus their pointwise average.

    Without a condition the curves are the ICE curves and the average is
    the PDP; with one they are the CIPDP and CPDP for that segment.
    """

    grid: Grid
    condition: Condition | None
    instance_ids: np.ndarray
    curves: np.ndarray  # (n_instances, n_grid)
    average: np.ndarray
    centered: bool = False
    anchor_index: int | None = None

    @property
    def n_instances(self) -> int:
        return self.curves.shape[0]


def _pointwise_mean(curves: np.ndarray) -> np.ndarray:
    # per-column contiguous means so the result is bit-identical to averaging
    # the per-instance values one grid point at a time
    return np.array([np.mean(np.ascontiguousarray(curves[:, j]))
                     for j in range(curves.shape[1])])


def ice(model: SoftClassifier, data: Dataset, grid: Grid,
        condition: Condition | None = None) -> CurveFamily:
    """ICE curves (CIPDP under a condition): one curve per selected instance,
    evaluated by substituting each grid value into the feature column."""
    j = data.feature_index(grid.feature)
    if condition is None:
        ids = np.arange(data.n_rows)
    else:
        ids = np.nonzero(condition.mask(data))[0]
        if ids.size == 0:
            raise ValueError(f"no instances satisfy condition {condition.describe()!r}")
    base = data.X[ids]
    g = grid.n_points
    tiled = np.repeat(base, g, axis=0)
    tiled[:, j] = np.tile(grid.values, ids.size)
    curves = np.asarray(model.predict_proba(tiled), dtype=np.float64).reshape(ids.size, g)
    return CurveFamily(grid, condition, ids, curves, _pointwise_mean(curves))


def pdp(model: SoftClassifier, data: Dataset, grid: Grid) -> CurveFamily:
    """Partial dependence: the pointwise mean of all ICE curves."""
    return ice(model, data, grid, None)


def cpdp(model: SoftClassifier, data: Dataset, grid: Grid,
         condition: Condition) -> CurveFamily:
    """Conditional PDP: partial dependence over one segment's instances."""
    if condition is None:
        raise ValueError("cpdp requires a condition; use pdp otherwise")
    return ice(model, data, grid, condition)


def center_curves(family: CurveFamily, anchor: int = 0) -> CurveFamily:
    """Subtract each curve's value at the anchor grid index (and the
    average's), exposing slope heterogeneity; idempotent per anchor."""
    g = family.grid.n_points
    if not -g <= anchor < g:
        raise IndexError(f"anchor {anchor} outside grid of {g} points")
    anchor = anchor % g
    curves = family.curves - family.curves[:, anchor:anchor + 1]
    return CurveFamily(family.grid, family.condition, family.instance_ids,
                       curves, _pointwise_mean(curves), centered=True,
                       anchor_index=anchor)


def global_slope(family: CurveFamily) -> float:
    """Single straight-line slope of the average curve: the probability
    difference between the grid endpoints over the feature span."""
    if family.centered:
        raise ValueError("global slope is defined for uncentered curves")
    v = family.grid.values
    if v.size < 2 or v[-1] == v[0]:
        raise ValueError("grid must span a nonzero feature range")
    return float((family.average[-1] - family.average[0]) / (v[-1] - v[0]))


@dataclass(frozen=True)
class EffectRow:
    """One marginal-effect or elasticity measurement."""

    feature: str
    kind: str  # "marginal" | "elasticity"
    delta: float  # units (marginal) or fraction (elasticity)
    segment: str
    value: float | None
    n_in_range: int


@dataclass(frozen=True)
class EffectsTable:
    rows: tuple[EffectRow, ...]

    def __len__(self) -> int:
        return len(self.rows)

    def value(self, feature: str, kind: str, delta: float, segment: str):
        for r in self.rows:
            if (r.feature, r.kind, r.segment) == (feature, kind, segment) \
                    and r.delta == delta:
                return r.value
        raise KeyError((feature, kind, delta, segment))


def in_range_filter(data: Dataset, feature: str, delta: float,
                    mode: str = "unit") -> np.ndarray:
    """Indices of instances whose perturbed feature value stays within the
    observed range: x + delta for `unit` mode, x * (1 + delta) for `fraction`."""
    if delta == 0:
        raise ValueError("delta must be nonzero")
    if mode not in ("unit", "fraction"):
        raise ValueError("mode must be 'unit' or 'fraction'")
    spec = data.spec(feature)
    x = data.column(feature)
    moved = x + delta if mode == "unit" else x * (1.0 + delta)
    keep = (moved >= spec.observed_min) & (moved <= spec.observed_max)
    return np.nonzero(keep)[0]


def _restrict(data: Dataset, feature: str, delta: float, mode: str,
              condition: Condition | None) -> np.ndarray:
    ids = in_range_filter(data, feature, delta, mode)
    if condition is not None:
        mask = condition.mask(data)
        ids = ids[mask[ids]]
    return ids


def _q1(model, X) -> float:
    return market_share(np.atleast_1d(model.predict_proba(X)))[1]


def marginal_effect(model: SoftClassifier, data: Dataset, feature: str,
                    delta: float, condition: Condition | None = None) -> EffectRow:
    """Change in the soft market share per unit feature change, over the
    in-range (and optionally conditioned) instances."""
    if delta == 0:
        raise ValueError("delta must be nonzero")
    segment = condition.describe() if condition is not None else "All"
    ids = _restrict(data, feature, delta, "unit", condition)
    if ids.size == 0:
        return EffectRow(feature, "marginal", delta, segment, None, 0)
    X = data.X[ids]
    q_orig = _q1(model, X)
    moved = X.copy()
    moved[:, data.feature_index(feature)] += delta
    q_new = _q1(model, moved)
    return EffectRow(feature, "marginal", delta, segment,
                     (q_new - q_orig) / abs(delta), ids.size)


def elasticity(model: SoftClassifier, data: Dataset, feature: str,
               delta: float, condition: Condition | None = None) -> EffectRow:
    """Percent change in the soft market share per percent feature change
    (arc elasticity); defined for continuous features only."""
    if delta == 0:
        raise ValueError("delta must be nonzero")
    if data.spec(feature).kind != "continuous":
        raise ValueError(f"elasticity is only meaningful for continuous features; "
                         f"{feature!r} is {data.spec(feature).kind}")
    segment = condition.describe() if condition is not None else "All"
    ids = _restrict(data, feature, delta, "fraction", condition)
    if ids.size == 0:
        return EffectRow(feature, "elasticity", delta, segment, None, 0)
    X = data.X[ids]
    q_orig = _q1(model, X)
    if q_orig == 0.0:
        return EffectRow(feature, "elasticity", delta, segment, None, ids.size)
    moved = X.copy()
    moved[:, data.feature_index(feature)] *= 1.0 + delta
    q_new = _q1(model, moved)
    return EffectRow(feature, "elasticity", delta, segment,
                     ((q_new - q_orig) / q_orig) / abs(delta), ids.size)


def effects_suite(model: SoftClassifier, data: Dataset) -> EffectsTable:
    """The full level-of-service effects grid by market segment.

    Wait_Time uses -2 for the decrease (its survey values sit two apart);
    TT_MOD, the one continuous level-of-service variable, adds +/-10%
    arc elasticities.
    """
    segments: list[Condition | None] = [None]
    segments += [mode_condition(data, m) for m in data.mode_names()]
    rows = []
    plan = [
        ("Wait_Time", "marginal", (1.0, -2.0)),
        ("Transfer", "marginal", (1.0, -1.0)),
        ("Rideshare", "marginal", (1.0, -1.0)),
        ("TT_MOD", "marginal", (1.0, -1.0)),
        ("TT_MOD", "elasticity", (0.10, -0.10)),
    ]
    for feature, kind, deltas in plan:
        for delta in deltas:
            for cond in segments:
                if kind == "marginal":
                    rows.append(marginal_effect(model, data, feature, delta, cond))
                else:
                    rows.append(elasticity(model, data, feature, delta, cond))
    return EffectsTable(tuple(rows))


# --- exports ----------------------------------------------------------------

def curve_family_json(family: CurveFamily, max_curves: int = 100,
                      seed: int = 0) -> str:
    ids, curves = _export_sample(family, max_curves, seed)
    doc = {
        "feature": family.grid.feature,
        "grid": family.grid.values.tolist(),
        "condition": family.condition.describe() if family.condition else None,
        "centered": family.centered,
        "anchor_index": family.anchor_index,
        "n_instances": family.n_instances,
        "instance_ids": ids.tolist(),
        "curves": curves.tolist(),
        "average": family.average.tolist(),
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def curve_family_csv(family: CurveFamily, max_curves: int = 100,
                     seed: int = 0) -> str:
    """Long-format CSV (grid_value, instance_id | AVG, probability).

    At most `max_curves` individual curves are exported (seeded subsample);
    the AVG rows always reflect every instance.
    """
    ids, curves = _export_sample(family, max_curves, seed)
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["grid_value", "instance_id", "probability"])
    for i, inst in enumerate(ids):
        for j, gv in enumerate(family.grid.values):
            writer.writerow([repr(float(gv)), int(inst), repr(float(curves[i, j]))])
    for j, gv in enumerate(family.grid.values):
        writer.writerow([repr(float(gv)), "AVG", repr(float(family.average[j]))])
    return buf.getvalue()


def _export_sample(family: CurveFamily, max_curves: int, seed: int):
    if family.n_instances <= max_curves:
        return family.instance_ids, family.curves
    rng = np.random.Generator(np.random.PCG64(seed))
    pick = np.sort(rng.permutation(family.n_instances)[:max_curves])
    return family.instance_ids[pick], family.curves[pick]


def effects_table_json(table: EffectsTable) -> str:
    doc = [{"feature": r.feature, "kind": r.kind, "delta": r.delta,
            "segment": r.segment, "value": r.value, "n_in_range": r.n_in_range}
           for r in table.rows]
    return json.dumps(doc, indent=2, sort_keys=True)


def effects_table_csv(table: EffectsTable) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["feature", "delta", "segment", "kind", "value", "n_in_range"])
    for r in table.rows:
        writer.writerow([r.feature, repr(float(r.delta)), r.segment, r.kind,
                         "" if r.value is None else repr(float(r.value)),
                         r.n_in_range])
    return buf.getvalue()
