import numpy as np
import pytest

from sepindex.distance import distance_matrix, nearest_neighbors
from sepindex.errors import InputError, MemoryBudgetError
from sepindex.matrix import FeatureMatrix, normalize
from sepindex.si import separation_index, separation_index_sampled

from helpers import brute_si, minmax_ref, random_labeled


def test_two_points_opposite_labels():
    mat = FeatureMatrix([[0.0], [25.0]], [0, 1], ("x",))
    result = separation_index(mat)
    assert result.value == 0.0
    assert result.matched_count == 0
    assert (result.m, result.sample_size) == (2, 2)
    assert result.estimator == "exact"
    assert result.standard_error == 0.0


def test_paired_points_score_one():
    mat = FeatureMatrix([[0.0], [0.1], [9.0], [9.1]], [0, 0, 1, 1], ("x",))
    assert separation_index(mat).value == 1.0


def test_matches_brute_oracle():
    rng = np.random.default_rng(10)
    for _ in range(10):
        mat = random_labeled(rng, 80, 4, 3)
        got = separation_index(mat).value
        assert got == brute_si(minmax_ref(mat.values), mat.labels)
        got_raw = separation_index(mat, normalization="none").value
        assert got_raw == brute_si(mat.values, mat.labels)


def test_row_permutation_invariance():
    rng = np.random.default_rng(11)
    mat = random_labeled(rng, 120, 5, 2)
    base = separation_index(mat).value
    perm = rng.permutation(120)
    shuffled = FeatureMatrix(mat.values[perm], mat.labels[perm], mat.column_names)
    assert separation_index(shuffled).value == base


def test_label_renaming_invariance():
    rng = np.random.default_rng(12)
    mat = random_labeled(rng, 100, 4, 2)
    base = separation_index(mat).value
    swapped = FeatureMatrix(mat.values, 1 - mat.labels, mat.column_names)
    assert separation_index(swapped).value == base


def test_duplicating_all_columns_keeps_neighbors():
    rng = np.random.default_rng(13)
    mat = random_labeled(rng, 150, 4, 2)
    doubled = FeatureMatrix(
        np.hstack([mat.values, mat.values]), mat.labels,
        mat.column_names + tuple(f"{c}_copy" for c in mat.column_names))

    base_nn = nearest_neighbors(distance_matrix(normalize(mat)[0]))
    doubled_nn = nearest_neighbors(distance_matrix(normalize(doubled)[0]))
    assert np.array_equal(doubled_nn.nearest_index, base_nn.nearest_index)
    assert separation_index(doubled).value == separation_index(mat).value


def test_tile_rows_variants_agree():
    rng = np.random.default_rng(14)
    mat = random_labeled(rng, 90, 6, 2)
    full = separation_index(mat, tile_rows=None)
    assert separation_index(mat, tile_rows=13).value == full.value
    assert separation_index(mat, tile_rows="auto").value == full.value
    # a budget too small for the full matrix falls back to tiling under "auto"
    squeezed = separation_index(mat, tile_rows="auto", memory_budget=90 * 90 * 8 - 1)
    assert squeezed.value == full.value


def test_full_path_respects_budget():
    mat = random_labeled(np.random.default_rng(15), 100, 3, 2)
    with pytest.raises(MemoryBudgetError):
        separation_index(mat, tile_rows=None, memory_budget=100 * 100 * 8 - 1)


def test_validation():
    one_row = FeatureMatrix([[1.0]], [0], ("x",))
    with pytest.raises(InputError, match="at least 2 rows"):
        separation_index(one_row)
    single_class = FeatureMatrix([[1.0], [2.0]], [0, 0], ("x",))
    with pytest.raises(InputError, match="single class"):
        separation_index(single_class)


def test_sampled_full_sample_equals_exact():
    rng = np.random.default_rng(16)
    mat = random_labeled(rng, 200, 5, 2)
    exact = separation_index(mat)
    sampled = separation_index_sampled(mat, sample_size=200, seed=3)
    assert sampled.value == exact.value
    assert sampled.estimator == "sampled"
    assert sampled.seed == 3


def test_sampled_is_deterministic_per_seed():
    rng = np.random.default_rng(17)
    mat = random_labeled(rng, 400, 5, 2)
    a = separation_index_sampled(mat, sample_size=100, seed=7)
    b = separation_index_sampled(mat, sample_size=100, seed=7)
    assert a == b
    expected_se = np.sqrt(a.value * (1.0 - a.value) / 100)
    assert a.standard_error == pytest.approx(expected_se, abs=0.0)


def test_sampled_bounds():
    mat = random_labeled(np.random.default_rng(18), 50, 3, 2)
    with pytest.raises(InputError, match=r"sample_size must be in \[2, 50\]"):
        separation_index_sampled(mat, sample_size=1, seed=0)
    with pytest.raises(InputError, match=r"sample_size must be in \[2, 50\]"):
        separation_index_sampled(mat, sample_size=51, seed=0)


def test_column_scaling_is_removed_by_minmax():
    rng = np.random.default_rng(19)
    mat = random_labeled(rng, 130, 4, 2)
    scaled_col = mat.values.copy()
    scaled_col[:, 2] *= 1000.0
    rescaled = FeatureMatrix(scaled_col, mat.labels, mat.column_names)
    assert separation_index(rescaled).value == separation_index(mat).value
