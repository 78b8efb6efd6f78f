"""Tabular dataset handling: feature specs, CSV I/O, splitting, diagnostics.

A Dataset is an immutable N x p feature matrix plus a binary response
(0 = keep current mode, 1 = switch). Feature metadata travels with the
data as FeatureSpec records; observed ranges are always recomputed from
the actual values so downstream range-sensitive tools (grids, in-range
filters) see what the data really contains.

All randomness is driven by numpy's PCG64 generator seeded from a single
64-bit integer.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

KINDS = ("continuous", "discrete-ordinal", "binary")
RESPONSE_COLUMN = "switch"
MODE_PREFIX = "Current_Mode_"


class DataError(ValueError):
    """Raised when ingested data violates the schema contract."""


@dataclass(frozen=True)
class FeatureSpec:
    """Metadata for one feature column."""

    name: str
    kind: str
    unit: str = ""
    observed_min: float = 0.0
    observed_max: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r} for {self.name!r}")
        if not self.observed_min <= self.observed_max:
            raise ValueError(f"{self.name}: observed_min > observed_max")
        if self.kind == "binary" and (self.observed_min, self.observed_max) != (0.0, 1.0):
            raise ValueError(f"{self.name}: binary features must span exactly {{0, 1}}")


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix + binary response + per-feature metadata.

    segment_keys names the current-mode indicator columns (at most one
    active per row); rows where none is active belong to the residual
    mode (Bus in the survey layout).
    """

    specs: tuple[FeatureSpec, ...]
    X: np.ndarray
    y: np.ndarray
    segment_keys: tuple[str, ...] = ()
    residual_mode: str = "Bus"

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.specs)

    def feature_index(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise KeyError(f"unknown feature {name!r}") from None

    def spec(self, name: str) -> FeatureSpec:
        return self.specs[self.feature_index(name)]

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.feature_index(name)]

    def mode_names(self) -> tuple[str, ...]:
        """Segment labels in fixed order: one per indicator key, then the residual."""
        return tuple(k.removeprefix(MODE_PREFIX) for k in self.segment_keys) + (self.residual_mode,)

    def current_mode(self) -> np.ndarray:
        """Per-row current travel mode label derived from the indicator columns.

        Raises DataError if any row activates more than one indicator.
        """
        if not self.segment_keys:
            raise DataError("dataset has no segment_keys; cannot derive current mode")
        ind = np.column_stack([self.column(k) for k in self.segment_keys])
        active = ind.sum(axis=1)
        if np.any(active > 1):
            bad = int(np.argmax(active > 1))
            raise DataError(f"row {bad + 1} has more than one active mode indicator")
        names = self.mode_names()
        labels = np.full(self.n_rows, names[-1], dtype=object)
        for j, key in enumerate(self.segment_keys):
            labels[ind[:, j] == 1] = names[j]
        return labels

    def subset(self, indices: np.ndarray) -> "Dataset":
        """Row subset sharing this dataset's specs (observed ranges are inherited,
        not recomputed, so range-based tools keep the full-data view)."""
        idx = np.asarray(indices)
        return Dataset(self.specs, _freeze(self.X[idx]), _freeze(self.y[idx]),
                       self.segment_keys, self.residual_mode)


@dataclass(frozen=True)
class CrossTab:
    """Counts of switching decision by current travel mode."""

    modes: tuple[str, ...]
    counts: np.ndarray  # len(modes) x 2, columns = decision 0, 1

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


def _detect_segment_keys(names) -> tuple[str, ...]:
    return tuple(n for n in names if n.startswith(MODE_PREFIX))


def build_dataset(specs, X, y, segment_keys=None, residual_mode="Bus") -> Dataset:
    """Validate raw arrays against the schema and assemble a Dataset.

    Observed ranges in `specs` are recomputed from the data (binary ranges
    stay pinned at {0, 1}); values must be finite, binary columns must hold
    only 0/1, and discrete-ordinal columns only integers.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2:
        raise DataError("feature matrix must be 2-dimensional")
    if X.shape[0] != y.shape[0]:
        raise DataError("feature matrix and response length mismatch")
    if X.shape[1] != len(specs):
        raise DataError(f"expected {len(specs)} feature columns, got {X.shape[1]}")
    if X.shape[0] == 0:
        raise DataError("empty dataset")
    if not np.all(np.isfinite(X)):
        i, j = np.argwhere(~np.isfinite(X))[0]
        raise DataError(f"non-finite value at row {i + 1}, column {specs[j].name!r}")
    if not np.isin(y, (0, 1)).all():
        raise DataError("response not binary")
    y = y.astype(np.int64)

    final = []
    for j, s in enumerate(specs):
        col = X[:, j]
        if s.kind == "binary":
            if not np.isin(col, (0.0, 1.0)).all():
                raise DataError(f"binary column {s.name!r} holds values outside {{0, 1}}")
            final.append(replace(s, observed_min=0.0, observed_max=1.0))
        else:
            if s.kind == "discrete-ordinal" and not np.all(col == np.round(col)):
                raise DataError(f"discrete-ordinal column {s.name!r} holds non-integer values")
            final.append(replace(s, observed_min=float(col.min()), observed_max=float(col.max())))

    if segment_keys is None:
        segment_keys = _detect_segment_keys(s.name for s in final)
    return Dataset(tuple(final), _freeze(X), _freeze(y), tuple(segment_keys), residual_mode)


def load_csv(path, schema) -> Dataset:
    """Read a dataset from CSV: feature columns in schema order, then `switch`.

    Rejects unknown/missing columns, empty cells (naming the data row) and
    non-numeric cells. Observed ranges are recomputed from the file.
    """
    schema = tuple(schema)
    expected = [s.name for s in schema] + [RESPONSE_COLUMN]
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if header != expected:
            unknown = [c for c in header if c not in expected]
            if unknown:
                raise DataError(f"{path}: unknown column {unknown[0]!r}")
            raise DataError(f"{path}: header mismatch, expected {expected}")
        rows = []
        for i, rec in enumerate(reader, start=1):
            if len(rec) != len(expected):
                raise DataError(f"{path}: row {i} has {len(rec)} cells, expected {len(expected)}")
            vals = []
            for name, cell in zip(expected, rec):
                if cell.strip() == "":
                    raise DataError(f"{path}: missing value at row {i}, column {name!r}")
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DataError(f"{path}: non-numeric cell {cell!r} at row {i}, "
                                    f"column {name!r}") from None
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    arr = np.asarray(rows, dtype=np.float64)
    return build_dataset(schema, arr[:, :-1], arr[:, -1])


def _format_number(v) -> str:
    v = float(v)
    return str(int(v)) if v == int(v) and abs(v) < 1e15 else repr(v)


def to_csv_text(data: Dataset) -> str:
    """Render a dataset in the load_csv layout (deterministic formatting)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(data.feature_names) + [RESPONSE_COLUMN])
    for i in range(data.n_rows):
        writer.writerow([_format_number(v) for v in data.X[i]] + [str(int(data.y[i]))])
    return buf.getvalue()


def save_csv(data: Dataset, path) -> None:
    """Write a dataset in the load_csv layout."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(to_csv_text(data))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(data: Dataset, test_fraction: float, seed: int):
    """Split into (train, test), drawing round(size * fraction) test rows
    from each current-mode stratum. Row order is preserved.

    Strata too small to contribute any test row trigger a warning.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    modes = data.current_mode()
    rng = np.random.Generator(np.random.PCG64(seed))
    test_mask = np.zeros(data.n_rows, dtype=bool)
    for mode in data.mode_names():
        idx = np.nonzero(modes == mode)[0]
        if idx.size == 0:
            continue
        n_test = _round_half_up(idx.size * test_fraction)
        if n_test == 0:
            warnings.warn(f"stratum {mode!r} ({idx.size} rows) contributes no test rows "
                          f"at fraction {test_fraction}", stacklevel=2)
            continue
        chosen = rng.permutation(idx.size)[:n_test]
        test_mask[idx[chosen]] = True
    return data.subset(np.nonzero(~test_mask)[0]), data.subset(np.nonzero(test_mask)[0])


def kfold_partition(data_or_n, k: int, seed: int) -> list[np.ndarray]:
    """Partition row indices into k disjoint folds with sizes differing by <= 1."""
    n = data_or_n if isinstance(data_or_n, int) else data_or_n.n_rows
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of rows ({n})")
    rng = np.random.Generator(np.random.PCG64(seed))
    perm = rng.permutation(n)
    base, extra = divmod(n, k)
    folds, start = [], 0
    for j in range(k):
        size = base + (1 if j < extra else 0)
        folds.append(np.sort(perm[start:start + size]))
        start += size
    return folds


def vif(data: Dataset) -> dict[str, float]:
    """Variance inflation factor per feature: 1 / (1 - R^2) from regressing
    each column (with intercept) on all the others.

    Perfectly collinear columns report +inf; constant columns are an error.
    """
    X = data.X
    n, p = X.shape
    if p < 2:
        raise ValueError("VIF needs at least two features")
    for j, s in enumerate(data.specs):
        if np.ptp(X[:, j]) == 0.0:
            raise ValueError(f"constant column {s.name!r}")
    out = {}
    for j, s in enumerate(data.specs):
        target = X[:, j]
        others = np.column_stack([np.ones(n), np.delete(X, j, axis=1)])
        coef, *_ = np.linalg.lstsq(others, target, rcond=None)
        resid = target - others @ coef
        ss_tot = float(np.sum((target - target.mean()) ** 2))
        r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot
        out[s.name] = math.inf if r2 >= 1.0 - 1e-12 else 1.0 / (1.0 - r2)
    return out


def crosstab(data: Dataset) -> CrossTab:
    """Cross-tabulate current mode against the switching decision."""
    modes = data.current_mode()
    names = data.mode_names()
    counts = np.zeros((len(names), 2), dtype=np.int64)
    for i, mode in enumerate(names):
        in_mode = modes == mode
        counts[i, 0] = int(np.sum(in_mode & (data.y == 0)))
        counts[i, 1] = int(np.sum(in_mode & (data.y == 1)))
    return CrossTab(names, _freeze(counts))
