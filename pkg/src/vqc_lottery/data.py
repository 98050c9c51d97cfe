"""Iris/Wine loading, binary simplification, stratified splits and scaling.

The bundled files are the UCI distributions (label as last column for Iris,
first column for Wine), generated from the copies shipped with
scikit-learn:

    iris.data  sha256 36f668d1cbc29a8c2c1128c5d2f0d400fa04ed4dc62d12246f44ce9360360cc0
    wine.data  sha256 b5e6cbacfa1dcb13f28459e3e501a6271672016433281a2e50331f71162acc41
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, ContractError, ParseError, SchemaError

EMBEDDING_RANGE = (0.0, math.pi)

_BUILTIN = {
    "iris": ("iris.data", -1),
    "wine": ("wine.data", 0),
}
DATASET_NAMES = ("iris", "iris2", "wine", "wine2")


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    name: str = "data"
    class_names: tuple = field(default=())

    def __post_init__(self):
        if self.features.ndim != 2 or self.labels.shape != (self.features.shape[0],):
            raise ContractError("features must be (n, d) with one label per row")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[indices], self.labels[indices], self.n_classes, self.name, self.class_names)


@dataclass(frozen=True, eq=False)
class Split:
    train: np.ndarray
    validation: np.ndarray
    seed: int


@dataclass(frozen=True, eq=False)
class SplitData:
    """Scaled train/validation pair handed to training."""

    train: Dataset
    validation: Dataset


def _label_key(value: str):
    try:
        return (0, float(value), value)
    except ValueError:
        return (1, 0.0, value)


def load_csv(path, label_column=-1, delimiter=",", header=False, name=None) -> Dataset:
    """Read numeric features plus one label column.

    ``label_column`` is an index (negative counts from the end) or, with
    ``header=True``, a column name. Labels are remapped to 0..c-1 in
    sorted order (numerically when all labels parse as numbers).
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh, delimiter=delimiter), start=1) if r]
    if header:
        if not rows:
            raise SchemaError(f"{path}: empty file")
        _, head = rows.pop(0)
        if isinstance(label_column, str):
            if label_column not in head:
                raise SchemaError(f"{path}: no column named {label_column!r}")
            label_column = head.index(label_column)
    elif isinstance(label_column, str):
        raise SchemaError("a named label column requires header=True")
    if not rows:
        raise SchemaError(f"{path}: no data rows")

    width = len(rows[0][1])
    if width < 2:
        raise SchemaError(f"{path}: need at least one feature and one label column")
    if not -width <= label_column < width:
        raise SchemaError(f"{path}: label column {label_column} out of range for {width} columns")
    label_column %= width

    feats, raw_labels = [], []
    for line, row in rows:
        if len(row) != width:
            raise SchemaError(f"{path}:{line}: expected {width} columns, found {len(row)}")
        try:
            values = [float(v) for j, v in enumerate(row) if j != label_column]
        except ValueError as exc:
            raise ParseError(f"{path}:{line}: {exc}") from None
        if not all(math.isfinite(v) for v in values):
            raise ParseError(f"{path}:{line}: non-finite feature value")
        feats.append(values)
        raw_labels.append(row[label_column].strip())

    classes = sorted(set(raw_labels), key=_label_key)
    index = {c: i for i, c in enumerate(classes)}
    return Dataset(
        features=np.array(feats, dtype=np.float64),
        labels=np.array([index[v] for v in raw_labels], dtype=np.int64),
        n_classes=len(classes),
        name=name or path.stem,
        class_names=tuple(classes),
    )


def load_builtin(name: str) -> Dataset:
    """``iris``, ``wine``, or their two-class variants ``iris2``/``wine2``."""
    if name not in DATASET_NAMES:
        raise ConfigError(f"unknown dataset {name!r}; expected one of {DATASET_NAMES}")
    base = name.rstrip("2")
    filename, label_column = _BUILTIN[base]
    with resources.as_file(resources.files("vqc_lottery.datasets") / filename) as path:
        ds = load_csv(path, label_column=label_column, name=base)
    return simplify(ds) if name.endswith("2") else ds


def simplify(dataset: Dataset) -> Dataset:
    """Drop class index 2, keeping row order."""
    if dataset.n_classes < 3:
        raise ContractError("simplify needs a dataset with at least 3 classes")
    keep = dataset.labels != 2
    remap = np.array([0, 1, -1] + list(range(2, dataset.n_classes - 1)))
    names = dataset.class_names[:2] + dataset.class_names[3:] if dataset.class_names else ()
    return Dataset(
        dataset.features[keep],
        remap[dataset.labels[keep]],
        dataset.n_classes - 1,
        dataset.name + "2",
        names,
    )


def split(dataset: Dataset, fraction: float = 0.8, seed: int = 0) -> Split:
    """Seeded stratified train/validation split."""
    if not 0 < fraction < 1:
        raise ContractError("fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    train, val = [], []
    for c in range(dataset.n_classes):
        idx = np.flatnonzero(dataset.labels == c)
        if idx.size < 2:
            raise ContractError(f"class {c} has {idx.size} instance(s); stratification needs 2")
        idx = rng.permutation(idx)
        k = min(max(int(round(fraction * idx.size)), 1), idx.size - 1)
        train.append(idx[:k])
        val.append(idx[k:])
    return Split(np.sort(np.concatenate(train)), np.sort(np.concatenate(val)), seed)


def scale_features(dataset: Dataset, feature_range=EMBEDDING_RANGE, reference: Dataset | None = None) -> Dataset:
    """Per-column min-max scaling into ``feature_range``.

    Column statistics come from ``reference`` (the training split) when
    given, so validation rows never influence them. Constant columns map to
    the midpoint of the range.
    """
    lo, hi = feature_range
    if not hi > lo:
        raise ContractError("feature_range needs hi > lo")
    ref = (reference if reference is not None else dataset).features
    cmin, cmax = ref.min(axis=0), ref.max(axis=0)
    span = cmax - cmin
    constant = span == 0
    if constant.any():
        warnings.warn(f"constant feature column(s) {np.flatnonzero(constant).tolist()} mapped to midpoint")
    safe = np.where(constant, 1.0, span)
    scaled = lo + (dataset.features - cmin) / safe * (hi - lo)
    scaled[:, constant] = 0.5 * (lo + hi)
    return Dataset(scaled, dataset.labels, dataset.n_classes, dataset.name, dataset.class_names)


def prepare(dataset: Dataset, seed: int, fraction: float = 0.8, feature_range=EMBEDDING_RANGE) -> SplitData:
    """Split by ``seed`` and scale both halves with training-split statistics."""
    s = split(dataset, fraction, seed)
    train = dataset.subset(s.train)
    val = dataset.subset(s.validation)
    return SplitData(
        scale_features(train, feature_range),
        scale_features(val, feature_range, reference=train),
    )


def save_csv(dataset: Dataset, path) -> None:
    """Write features then the integer label, one row per instance."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for x, y in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in x] + [int(y)])
