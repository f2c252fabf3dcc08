"""Labeled feature matrices: construction, normalization, CSV round-trip.

A :class:`FeatureMatrix` bundles an ``(m, n)`` float matrix with an integer
class label per row and a name per column.  It is the common currency between
the feature pipeline, the Separation Index estimators, and the k-NN models.

Rows may contain NaN while a pipeline is still assembling features (indicator
warm-up); anything that measures distances requires a finite matrix and the
helpers here make dropping undefined rows explicit.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import ConstantColumnWarning, InputError

LABEL_COLUMN = "label"

NORMALIZATIONS = ("minmax", "zscore", "none")


@dataclass(frozen=True)
class FeatureMatrix:
    """Feature rows, one integer label per row, one name per column."""

    values: np.ndarray
    labels: np.ndarray
    column_names: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if values.ndim != 2:
            raise InputError(f"values must be 2-D, got shape {values.shape}")
        if labels.ndim != 1 or labels.shape[0] != values.shape[0]:
            raise InputError(
                f"labels must be 1-D with one entry per row: "
                f"{labels.shape} vs {values.shape[0]} rows"
            )
        names = tuple(str(c) for c in self.column_names)
        if len(names) != values.shape[1]:
            raise InputError(
                f"{len(names)} column names for {values.shape[1]} columns"
            )
        if len(set(names)) != len(names):
            dupes = sorted({c for c in names if names.count(c) > 1})
            raise InputError(f"duplicate column names: {dupes}")
        if labels.size and labels.min() < 0:
            raise InputError("labels must be non-negative integers")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "column_names", names)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1 if self.m else 0

    def distinct_labels(self) -> np.ndarray:
        return np.unique(self.labels)

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.values).all())

    def select_columns(self, names) -> "FeatureMatrix":
        """Project onto the given columns, in the given order."""
        names = list(names)
        index = {c: j for j, c in enumerate(self.column_names)}
        missing = [c for c in names if c not in index]
        if missing:
            raise InputError(f"unknown columns: {missing}")
        cols = [index[c] for c in names]
        return FeatureMatrix(self.values[:, cols], self.labels, tuple(names))

    def take_rows(self, rows) -> "FeatureMatrix":
        return FeatureMatrix(self.values[rows], self.labels[rows], self.column_names)

    def drop_undefined(self) -> tuple["FeatureMatrix", int]:
        """Remove rows containing NaN/Inf; returns (clean matrix, rows dropped)."""
        keep = np.isfinite(self.values).all(axis=1)
        dropped = int(self.m - keep.sum())
        return self.take_rows(keep), dropped


@dataclass(frozen=True)
class Scaler:
    """Per-column affine transform fitted by :func:`normalize`.

    ``scale`` holds 0 for constant columns; those map to all zeros so that a
    spread-free feature cannot dominate (or contribute to) any distance.
    """

    method: str
    offset: np.ndarray
    scale: np.ndarray
    column_names: tuple[str, ...]
    constant_columns: tuple[str, ...]

    def transform(self, matrix: FeatureMatrix) -> FeatureMatrix:
        if matrix.column_names != self.column_names:
            raise InputError(
                f"scaler fitted on {list(self.column_names)}, "
                f"got {list(matrix.column_names)}"
            )
        if self.method == "none":
            return matrix
        safe = np.where(self.scale == 0.0, 1.0, self.scale)
        out = (matrix.values - self.offset) / safe
        out[:, self.scale == 0.0] = 0.0
        return FeatureMatrix(out, matrix.labels, matrix.column_names)


def normalize(matrix: FeatureMatrix, method: str = "minmax") -> tuple[FeatureMatrix, Scaler]:
    """Fit a per-column scaler on ``matrix`` and return the scaled copy.

    minmax maps each column onto [0, 1]; zscore centers on the column mean and
    divides by the sample standard deviation (ddof=1).  Constant columns are
    mapped to zeros and reported through a :class:`ConstantColumnWarning`.
    """
    if method not in NORMALIZATIONS:
        raise InputError(f"unknown normalization {method!r}, expected one of {NORMALIZATIONS}")
    if matrix.m == 0:
        raise InputError("cannot normalize an empty matrix")
    if not matrix.is_finite():
        raise InputError("matrix contains NaN/Inf; drop undefined rows before normalizing")

    if method == "none":
        scaler = Scaler("none", np.zeros(matrix.n), np.ones(matrix.n),
                        matrix.column_names, ())
        return matrix, scaler

    if method == "minmax":
        offset = matrix.values.min(axis=0)
        scale = matrix.values.max(axis=0) - offset
    else:
        offset = matrix.values.mean(axis=0)
        if matrix.m < 2:
            scale = np.zeros(matrix.n)
        else:
            scale = matrix.values.std(axis=0, ddof=1)

    constant = tuple(c for c, s in zip(matrix.column_names, scale) if s == 0.0)
    if constant:
        warnings.warn(
            f"constant columns mapped to zeros under {method}: {list(constant)}",
            ConstantColumnWarning,
            stacklevel=2,
        )
    scaler = Scaler(method, offset, scale, matrix.column_names, constant)
    return scaler.transform(matrix), scaler


def from_dataframe(frame: pd.DataFrame, label_column: str = LABEL_COLUMN,
                   drop_columns: tuple[str, ...] = ()) -> FeatureMatrix:
    if label_column not in frame.columns:
        raise InputError(f"missing {label_column!r} column")
    feature_cols = [c for c in frame.columns if c != label_column and c not in drop_columns]
    values = frame[feature_cols].to_numpy(dtype=np.float64)
    labels = frame[label_column].to_numpy()
    if not np.isfinite(labels).all():
        raise InputError(f"{label_column!r} column contains undefined entries")
    as_int = labels.astype(np.int64)
    if not np.array_equal(as_int, labels):
        raise InputError(f"{label_column!r} column must hold integers")
    return FeatureMatrix(values, as_int, tuple(feature_cols))


def to_dataframe(matrix: FeatureMatrix) -> pd.DataFrame:
    frame = pd.DataFrame(matrix.values, columns=list(matrix.column_names))
    frame[LABEL_COLUMN] = matrix.labels
    return frame


def load_csv(path, label_column: str = LABEL_COLUMN) -> FeatureMatrix:
    """Read a feature CSV: numeric feature columns plus an integer label column."""
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise InputError(f"cannot read feature CSV {path}: {exc}") from exc
    for col in frame.columns:
        if col == label_column:
            continue
        if not pd.api.types.is_numeric_dtype(frame[col]):
            raise InputError(f"non-numeric feature column {col!r} in {path}")
    return from_dataframe(frame, label_column)


def save_csv(matrix: FeatureMatrix, path) -> None:
    to_dataframe(matrix).to_csv(path, index=False)
