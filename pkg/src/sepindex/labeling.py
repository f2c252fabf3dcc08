"""Direction labels, ten-class magnitude buckets, and lagged features.

A row at time t is labeled by what the close does between t and t+1: the
direction label is 1 when the next close is higher, else 0, and the magnitude
class places the signed change into ten buckets.  The last row has no next
close and is dropped.

Bucket geometry comes from the training portion of the data only: the mean
positive change and mean negative change each split into four equal-width
bins, classes 0 and 9 catch changes beyond those means, and a zero change
sits in class 4 (the mildest negative bucket, adjacent to the mildest
positive bucket, class 5).  Interior bin edges belong to the class nearer
zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .matrix import FeatureMatrix

N_MAGNITUDE_CLASSES = 10


@dataclass(frozen=True)
class MagnitudeStats:
    """Bucket geometry fitted on training changes."""

    mean_positive: float
    mean_negative: float

    def __post_init__(self):
        if not (np.isfinite(self.mean_positive) and self.mean_positive > 0):
            raise InputError(f"mean positive change must be > 0, got {self.mean_positive}")
        if not (np.isfinite(self.mean_negative) and self.mean_negative < 0):
            raise InputError(f"mean negative change must be < 0, got {self.mean_negative}")

    @classmethod
    def from_changes(cls, changes: np.ndarray) -> "MagnitudeStats":
        changes = np.asarray(changes, dtype=np.float64)
        pos = changes[changes > 0]
        neg = changes[changes < 0]
        if pos.size == 0 or neg.size == 0:
            raise InputError(
                "need at least one positive and one negative close change "
                "to fit magnitude buckets"
            )
        return cls(float(pos.mean()), float(neg.mean()))

    @property
    def positive_width(self) -> float:
        return self.mean_positive / 4.0

    @property
    def negative_width(self) -> float:
        return -self.mean_negative / 4.0

    def bin_edges(self) -> np.ndarray:
        """The nine interior edges between classes 0..9, ascending."""
        w_neg, w_pos = self.negative_width, self.positive_width
        lower = self.mean_negative + w_neg * np.arange(4)
        upper = self.positive_width * np.arange(1, 5)
        return np.concatenate((lower, [0.0], upper[:-1], [self.mean_positive]))

    def to_dict(self) -> dict:
        return {
            "mean_positive": self.mean_positive,
            "mean_negative": self.mean_negative,
            "bin_edges": [float(e) for e in self.bin_edges()],
        }


def bucket_magnitude(changes, stats: MagnitudeStats) -> np.ndarray:
    """Map signed close changes onto classes 0..9.

    Classes 1..4 split [mean_negative, 0] into four equal bins, classes 5..8
    split (0, mean_positive], class 0 catches changes below the mean negative
    and class 9 changes above the mean positive.  Edges round toward zero's
    class, so a change exactly at a positive edge k*w stays in the lower bin.
    """
    changes = np.asarray(changes, dtype=np.float64)
    if not np.isfinite(changes).all():
        raise InputError("close changes must be finite")
    out = np.empty(changes.shape, dtype=np.int64)

    below = changes < stats.mean_negative
    above = changes > stats.mean_positive
    pos = (changes > 0) & ~above
    neg = ~pos & ~below & ~above  # mean_negative <= change <= 0

    k_pos = np.ceil(changes[pos] / stats.positive_width)
    out[pos] = 4 + np.clip(k_pos, 1, 4).astype(np.int64)
    k_neg = np.ceil(-changes[neg] / stats.negative_width)
    out[neg] = 5 - np.clip(k_neg, 1, 4).astype(np.int64)
    out[below] = 0
    out[above] = 9
    return out


@dataclass(frozen=True)
class LabeledFrame:
    """Feature rows with direction labels and magnitude classes attached.

    ``features.labels`` is the direction (0 down-or-flat, 1 up);
    ``magnitude_class`` the ten-class bucket of the same change.
    """

    features: FeatureMatrix
    magnitude_class: np.ndarray
    close_change: np.ndarray
    stats: MagnitudeStats

    def __post_init__(self):
        mag = np.asarray(self.magnitude_class, dtype=np.int64)
        change = np.asarray(self.close_change, dtype=np.float64)
        if mag.shape != (self.features.m,) or change.shape != (self.features.m,):
            raise InputError("magnitude/change arrays misaligned with features")
        if mag.size and (mag.min() < 0 or mag.max() >= N_MAGNITUDE_CLASSES):
            raise InputError("magnitude classes must lie in 0..9")
        object.__setattr__(self, "magnitude_class", mag)
        object.__setattr__(self, "close_change", change)

    @property
    def m(self) -> int:
        return self.features.m

    @property
    def direction(self) -> np.ndarray:
        return self.features.labels

    def take_rows(self, rows) -> "LabeledFrame":
        return LabeledFrame(self.features.take_rows(rows),
                            self.magnitude_class[rows],
                            self.close_change[rows], self.stats)

    def with_columns(self, names) -> "LabeledFrame":
        return LabeledFrame(self.features.select_columns(names),
                            self.magnitude_class, self.close_change, self.stats)

    def with_direction_labels(self) -> FeatureMatrix:
        return self.features

    def with_magnitude_labels(self) -> FeatureMatrix:
        return FeatureMatrix(self.features.values, self.magnitude_class,
                             self.features.column_names)


def label_rows(closes: np.ndarray, train_rows: int | None = None,
               stats: MagnitudeStats | None = None
               ) -> tuple[np.ndarray, np.ndarray, np.ndarray, MagnitudeStats]:
    """Direction and magnitude labels for rows 0..m-2 of a close series.

    Returns (direction, magnitude_class, close_change, stats).  When ``stats``
    is not supplied it is fitted on the first ``train_rows`` labeled rows
    (all of them by default), so bucket geometry never leaks from held-out data.
    """
    closes = np.asarray(closes, dtype=np.float64)
    if closes.size < 2:
        raise InputError("need at least 2 closes to label direction")
    change = np.diff(closes)
    direction = (change > 0).astype(np.int64)
    if stats is None:
        fit_on = change if train_rows is None else change[:train_rows]
        stats = MagnitudeStats.from_changes(fit_on)
    magnitude = bucket_magnitude(change, stats)
    return direction, magnitude, change, stats


def build_lags(matrix: FeatureMatrix, lags) -> FeatureMatrix:
    """Append lagged copies of every column.

    For each lag k the new columns ``<name>_lag<k>`` hold the values k rows
    back.  The first max(lags) rows (which lack history) are dropped, labels
    included.  Column count becomes n * (1 + len(lags)).
    """
    lags = [int(k) for k in lags]
    if not lags:
        raise InputError("lags must be non-empty")
    if any(k < 1 for k in lags):
        raise InputError(f"lags must be >= 1, got {lags}")
    if len(set(lags)) != len(lags):
        raise InputError(f"duplicate lags: {lags}")
    deepest = max(lags)
    if matrix.m <= deepest:
        raise InputError(f"matrix has {matrix.m} rows, too short for lag {deepest}")

    blocks = [matrix.values[deepest:]]
    names = list(matrix.column_names)
    for k in lags:
        blocks.append(matrix.values[deepest - k:matrix.m - k])
        names += [f"{c}_lag{k}" for c in matrix.column_names]
    return FeatureMatrix(np.hstack(blocks), matrix.labels[deepest:], tuple(names))
