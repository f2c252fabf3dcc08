"""Separation Index: the fraction of rows whose nearest neighbor shares their label.

For rows ``x_i`` with labels ``l_i`` the index is

    SI = (1/m) * sum_i [ l_i == l_{i*} ],   i* = argmin_{q != i} ||x_i - x_q||^2

which is exactly leave-one-out 1-nearest-neighbor accuracy.  Three estimators
are provided: exact via the full distance matrix, exact via reference tiling
(bounded memory, identical result), and an unbiased sampled estimate that
scores a random subset of rows against the full reference set.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from . import distance as _distance
from .errors import InputError
from .matrix import FeatureMatrix, normalize


@dataclass(frozen=True)
class SiResult:
    """Outcome of one Separation Index computation."""

    value: float
    matched_count: int
    m: int
    sample_size: int
    estimator: str  # "exact" | "sampled"
    standard_error: float
    normalization: str
    seed: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _validate_labels(matrix: FeatureMatrix) -> None:
    if matrix.m < 2:
        raise InputError(f"Separation Index needs at least 2 rows, got {matrix.m}")
    if matrix.distinct_labels().size < 2:
        raise InputError("all rows share one label; the index is undefined for a single class")


def _prepare(matrix: FeatureMatrix, normalization: str) -> FeatureMatrix:
    _validate_labels(matrix)
    if normalization == "none":
        if not matrix.is_finite():
            raise InputError("matrix contains NaN/Inf; drop undefined rows first")
        return matrix
    scaled, _ = normalize(matrix, normalization)
    return scaled


def separation_index(matrix: FeatureMatrix, *, normalization: str = "minmax",
                     tile_rows: int | str | None = "auto",
                     memory_budget: int = _distance.DEFAULT_MEMORY_BUDGET) -> SiResult:
    """Exact Separation Index.

    ``tile_rows`` picks the kernel: None forces the full m x m matrix (refused
    beyond ``memory_budget``), an integer forces tiling with that tile height,
    and "auto" uses the full matrix when it fits the budget and tiles otherwise.
    """
    scaled = _prepare(matrix, normalization)
    m = scaled.m

    if tile_rows == "auto":
        if m * m * 8 <= memory_budget:
            tile_rows = None
        else:
            tile_rows = _distance.auto_tile_rows(m, memory_budget)
    if tile_rows is None:
        assignment = _distance.nearest_neighbors(
            _distance.distance_matrix(scaled, memory_budget))
    else:
        assignment = _distance.nearest_neighbors_tiled(scaled, int(tile_rows))

    matched = scaled.labels[assignment.nearest_index] == scaled.labels
    matched_count = int(matched.sum())
    return SiResult(
        value=matched_count / m,
        matched_count=matched_count,
        m=m,
        sample_size=m,
        estimator="exact",
        standard_error=0.0,
        normalization=normalization,
    )


def separation_index_sampled(matrix: FeatureMatrix, sample_size: int, seed: int, *,
                             normalization: str = "minmax",
                             chunk_rows: int = 512) -> SiResult:
    """Unbiased sampled estimate of the Separation Index.

    Scores ``sample_size`` rows drawn uniformly without replacement; each
    sampled row is still matched against all other rows, so the per-row
    verdicts are the exact ones and the estimate is a plain mean with binomial
    standard error sqrt(v * (1 - v) / sample_size).
    """
    scaled = _prepare(matrix, normalization)
    m = scaled.m
    if not 2 <= sample_size <= m:
        raise InputError(f"sample_size must be in [2, {m}], got {sample_size}")

    rng = np.random.default_rng(seed)
    rows = np.sort(rng.choice(m, size=sample_size, replace=False))
    assignment = _distance.nearest_neighbors_sampled(scaled, rows, chunk_rows)

    matched = scaled.labels[assignment.nearest_index] == scaled.labels[rows]
    matched_count = int(matched.sum())
    value = matched_count / sample_size
    return SiResult(
        value=value,
        matched_count=matched_count,
        m=m,
        sample_size=sample_size,
        estimator="sampled",
        standard_error=float(np.sqrt(value * (1.0 - value) / sample_size)),
        normalization=normalization,
        seed=seed,
    )
