import numpy as np
import pytest

from sepindex.distance import (MIN_TILE_ROWS, DistanceMatrix, auto_tile_rows,
                               distance_matrix, nearest_neighbors,
                               nearest_neighbors_sampled,
                               nearest_neighbors_tiled)
from sepindex.errors import InputError, MemoryBudgetError
from sepindex.matrix import FeatureMatrix

from helpers import brute_nearest, brute_sq_distances, random_labeled


def test_two_points():
    mat = FeatureMatrix([[0.0], [5.0]], [0, 1], ("x",))
    dist = distance_matrix(mat)
    assert np.array_equal(dist.entries, [[0.0, 25.0], [25.0, 0.0]])
    nn = nearest_neighbors(dist)
    assert np.array_equal(nn.nearest_index, [1, 0])
    assert np.array_equal(nn.nearest_distance, [25.0, 25.0])


def test_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(5):
        mat = random_labeled(rng, 60, 6, 2)
        dist = distance_matrix(mat)
        assert np.abs(dist.entries - brute_sq_distances(mat.values)).max() <= 1e-9
        assert np.array_equal(dist.entries, dist.entries.T)
        assert np.array_equal(np.diag(dist.entries), np.zeros(60))
        assert dist.entries.min() >= 0.0


def test_distance_matrix_validation():
    with pytest.raises(InputError, match="square"):
        DistanceMatrix(np.zeros((2, 3)))
    one = FeatureMatrix([[1.0]], [0], ("x",))
    with pytest.raises(InputError, match="at least 2"):
        distance_matrix(one)
    dirty = FeatureMatrix([[np.nan], [1.0]], [0, 1], ("x",))
    with pytest.raises(InputError, match="NaN/Inf"):
        distance_matrix(dirty)


def test_memory_budget_refusal_names_alternative():
    rng = np.random.default_rng(1)
    mat = random_labeled(rng, 200, 4, 2)
    with pytest.raises(MemoryBudgetError, match="nearest_neighbors_tiled"):
        distance_matrix(mat, memory_budget=200 * 200 * 8 - 1)
    # exactly at the budget is allowed
    distance_matrix(mat, memory_budget=200 * 200 * 8)


def test_nearest_matches_brute_with_ties():
    rng = np.random.default_rng(2)
    mat = random_labeled(rng, 50, 4, 2)
    values = mat.values.copy()
    values[5] = values[2]  # exact duplicate pair
    mat = FeatureMatrix(values, mat.labels, mat.column_names)

    nn = nearest_neighbors(distance_matrix(mat))
    ref_index, ref_dist = brute_nearest(values)
    assert np.array_equal(nn.nearest_index, ref_index)
    assert np.abs(nn.nearest_distance - ref_dist).max() <= 1e-9
    assert nn.nearest_index[5] == 2
    assert nn.nearest_index[2] == 5


def test_three_way_duplicate_prefers_lowest_index():
    values = np.array([[1.0, 1.0], [9.0, 9.0], [1.0, 1.0], [1.0, 1.0]])
    mat = FeatureMatrix(values, [0, 1, 0, 1], ("a", "b"))
    nn = nearest_neighbors(distance_matrix(mat))
    assert list(nn.nearest_index) == [2, 0, 0, 0]


def test_tiled_equals_full_path():
    rng = np.random.default_rng(3)
    for m in (17, 64, 230):
        mat = random_labeled(rng, m, 5, 3)
        full = nearest_neighbors(distance_matrix(mat))
        for tile in (1, 7, 64, m):
            if tile > m:
                continue
            tiled = nearest_neighbors_tiled(mat, tile)
            assert np.array_equal(tiled.nearest_index, full.nearest_index)
            assert np.abs(tiled.nearest_distance - full.nearest_distance).max() <= 1e-9


def test_tiled_duplicate_ties_across_tile_boundaries():
    rng = np.random.default_rng(4)
    values = rng.standard_normal((40, 3))
    for i, j in ((0, 39), (7, 8), (10, 25)):
        values[j] = values[i]
    mat = FeatureMatrix(values, rng.integers(0, 2, 40), ("a", "b", "c"))
    full = nearest_neighbors(distance_matrix(mat))
    for tile in (1, 3, 8, 40):
        tiled = nearest_neighbors_tiled(mat, tile)
        assert np.array_equal(tiled.nearest_index, full.nearest_index)


def test_tiled_validation():
    mat = random_labeled(np.random.default_rng(5), 10, 2, 2)
    with pytest.raises(InputError, match=r"tile_rows must be in \[1, 10\]"):
        nearest_neighbors_tiled(mat, 0)
    with pytest.raises(InputError, match=r"tile_rows must be in \[1, 10\]"):
        nearest_neighbors_tiled(mat, 11)


def test_sampled_queries_match_full_path():
    rng = np.random.default_rng(6)
    mat = random_labeled(rng, 300, 6, 2)
    full = nearest_neighbors(distance_matrix(mat))
    rows = np.sort(rng.choice(300, 40, replace=False))
    sampled = nearest_neighbors_sampled(mat, rows, chunk_rows=16)
    assert np.array_equal(sampled.nearest_index, full.nearest_index[rows])
    assert np.abs(sampled.nearest_distance - full.nearest_distance[rows]).max() <= 1e-9


def test_auto_tile_rows_clamps():
    assert auto_tile_rows(1000, memory_budget=1) == MIN_TILE_ROWS
    assert auto_tile_rows(1000, memory_budget=64 * 1000 * 250) == 250
    assert auto_tile_rows(100, memory_budget=2**40) == 100
