"""Pairwise squared-Euclidean distances and nearest-neighbor assignment.

All kernels share one arithmetic path: with row norms ``sq_i = x_i . x_i`` and
Gram entries ``g_ij = x_i . x_j``, a squared distance is assembled as
``(sq_i + sq_j) - 2 * g_ij`` and clamped at zero, so round-off can never
produce a negative distance.  The full-matrix, tiled, and sampled-query paths
differ only in how many Gram columns they materialize at a time.

Nearest-neighbor ties are broken toward the lowest row index in every path.
The tiled path reproduces the full path's neighbor indices exactly; reported
distances agree to within float rounding (the underlying BLAS may associate
block products differently, which perturbs the last bits but not the argmin
of well-separated values, and exact duplicates still compare equal because
identical input rows yield identical products).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, MemoryBudgetError
from .matrix import FeatureMatrix

DEFAULT_MEMORY_BUDGET = 4 * 2**30  # bytes the full m x m matrix may occupy
MIN_TILE_ROWS = 16


@dataclass(frozen=True)
class DistanceMatrix:
    """Dense m x m squared-distance matrix: symmetric, zero diagonal."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.float64)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise InputError(f"distance matrix must be square, got {entries.shape}")
        object.__setattr__(self, "entries", entries)

    @property
    def m(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class NeighborAssignment:
    """Per row: the index of its nearest other row, and that squared distance."""

    nearest_index: np.ndarray
    nearest_distance: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.nearest_index, dtype=np.int64)
        dist = np.asarray(self.nearest_distance, dtype=np.float64)
        if idx.shape != dist.shape or idx.ndim != 1:
            raise InputError("nearest_index and nearest_distance must be 1-D and aligned")
        object.__setattr__(self, "nearest_index", idx)
        object.__setattr__(self, "nearest_distance", dist)


def _require_finite(values: np.ndarray) -> None:
    if not np.isfinite(values).all():
        raise InputError("matrix contains NaN/Inf; drop undefined rows first")


def _pair_block(values: np.ndarray, sq: np.ndarray, start: int, stop: int) -> np.ndarray:
    """Squared distances from every row to rows [start, stop), clamped at zero."""
    gram = values @ values[start:stop].T
    block = sq[:, None] + sq[start:stop][None, :]
    np.multiply(gram, 2.0, out=gram)
    np.subtract(block, gram, out=block)
    np.maximum(block, 0.0, out=block)
    return block


def distance_matrix(matrix: FeatureMatrix,
                    memory_budget: int = DEFAULT_MEMORY_BUDGET) -> DistanceMatrix:
    """Full m x m squared-distance matrix via one Gram product.

    Refuses to allocate when ``m * m * 8`` exceeds ``memory_budget``; use
    :func:`nearest_neighbors_tiled` (or a sampled estimate) at that scale.
    """
    if matrix.m < 2:
        raise InputError(f"need at least 2 rows, got {matrix.m}")
    _require_finite(matrix.values)
    needed = matrix.m * matrix.m * 8
    if needed > memory_budget:
        raise MemoryBudgetError(
            f"full distance matrix needs {needed / 2**30:.2f} GiB for m={matrix.m} "
            f"(budget {memory_budget / 2**30:.2f} GiB); "
            f"use nearest_neighbors_tiled or a sampled estimate"
        )
    values = matrix.values
    sq = np.einsum("ij,ij->i", values, values)
    entries = _pair_block(values, sq, 0, matrix.m)
    entries = entries + entries.T  # exact symmetry even if the BLAS is not symmetric
    entries *= 0.5
    np.fill_diagonal(entries, 0.0)
    return DistanceMatrix(entries)


def nearest_neighbors(distances: DistanceMatrix) -> NeighborAssignment:
    """Argmin over each row of a distance matrix, self excluded.

    Makes a masked copy, so the transient peak is two m x m arrays.
    """
    if distances.m < 2:
        raise InputError(f"need at least 2 rows, got {distances.m}")
    masked = distances.entries.copy()
    np.fill_diagonal(masked, np.inf)
    index = masked.argmin(axis=1)  # argmin keeps the lowest index on ties
    rows = np.arange(distances.m)
    return NeighborAssignment(index, masked[rows, index])


def nearest_neighbors_tiled(matrix: FeatureMatrix, tile_rows: int) -> NeighborAssignment:
    """Nearest neighbors without the m x m matrix.

    Streams reference rows in tiles of ``tile_rows``, keeping a running
    (distance, index) minimum per query row.  Peak additional memory is two
    m x tile_rows blocks.  Produces the same neighbor indices as
    :func:`nearest_neighbors` on the full matrix.
    """
    m = matrix.m
    if m < 2:
        raise InputError(f"need at least 2 rows, got {m}")
    if not 1 <= tile_rows <= m:
        raise InputError(f"tile_rows must be in [1, {m}], got {tile_rows}")
    _require_finite(matrix.values)

    values = matrix.values
    sq = np.einsum("ij,ij->i", values, values)
    best_distance = np.full(m, np.inf)
    best_index = np.full(m, m, dtype=np.int64)
    all_rows = np.arange(m)

    for start in range(0, m, tile_rows):
        stop = min(start + tile_rows, m)
        block = _pair_block(values, sq, start, stop)
        self_rows = np.arange(start, stop)
        block[self_rows, self_rows - start] = np.inf
        local = block.argmin(axis=1)
        distance = block[all_rows, local]
        index = local + start
        del block  # keep peak extra memory at two m x tile_rows blocks
        # lexicographic (distance, index) merge keeps the lowest-index tie
        better = (distance < best_distance) | (
            (distance == best_distance) & (index < best_index)
        )
        best_distance = np.where(better, distance, best_distance)
        best_index = np.where(better, index, best_index)

    return NeighborAssignment(best_index, best_distance)


def nearest_neighbors_sampled(matrix: FeatureMatrix, query_rows: np.ndarray,
                              chunk_rows: int = 512) -> NeighborAssignment:
    """Nearest neighbor over all m rows for each query row only."""
    m = matrix.m
    if m < 2:
        raise InputError(f"need at least 2 rows, got {m}")
    _require_finite(matrix.values)
    query_rows = np.asarray(query_rows, dtype=np.int64)

    values = matrix.values
    sq = np.einsum("ij,ij->i", values, values)
    out_index = np.empty(query_rows.size, dtype=np.int64)
    out_distance = np.empty(query_rows.size)

    for start in range(0, query_rows.size, chunk_rows):
        rows = query_rows[start:start + chunk_rows]
        gram = values @ values[rows].T
        block = sq[:, None] + sq[rows][None, :]
        np.multiply(gram, 2.0, out=gram)
        np.subtract(block, gram, out=block)
        np.maximum(block, 0.0, out=block)
        block[rows, np.arange(rows.size)] = np.inf
        local = block.argmin(axis=0)
        out_index[start:start + rows.size] = local
        out_distance[start:start + rows.size] = block[local, np.arange(rows.size)]

    return NeighborAssignment(out_index, out_distance)


def auto_tile_rows(m: int, memory_budget: int = DEFAULT_MEMORY_BUDGET) -> int:
    """Largest tile whose two working blocks fit well inside the budget."""
    per_row = 64 * m  # two float64 blocks of m rows, with headroom
    tile = max(MIN_TILE_ROWS, memory_budget // per_row) if m else MIN_TILE_ROWS
    return int(min(tile, max(m, 1)))
