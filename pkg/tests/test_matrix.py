import numpy as np
import pytest

from sepindex.errors import ConstantColumnWarning, InputError
from sepindex.matrix import (FeatureMatrix, from_dataframe, load_csv,
                             normalize, save_csv, to_dataframe)

from helpers import minmax_ref


def small():
    return FeatureMatrix(
        [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]],
        [0, 1, 0],
        ("a", "b", "c"),
    )


def test_shape_and_dtype():
    mat = small()
    assert (mat.m, mat.n) == (3, 3)
    assert mat.values.dtype == np.float64
    assert mat.labels.dtype == np.int64
    assert mat.n_classes == 2
    assert list(mat.distinct_labels()) == [0, 1]


def test_validation_errors():
    with pytest.raises(InputError, match="2-D"):
        FeatureMatrix([1.0, 2.0], [0, 1], ("a",))
    with pytest.raises(InputError, match="one entry per row"):
        FeatureMatrix([[1.0], [2.0]], [0], ("a",))
    with pytest.raises(InputError, match="column names"):
        FeatureMatrix([[1.0, 2.0]], [0], ("a",))
    with pytest.raises(InputError, match=r"duplicate column names: \['a'\]"):
        FeatureMatrix([[1.0, 2.0]], [0], ("a", "a"))
    with pytest.raises(InputError, match="non-negative"):
        FeatureMatrix([[1.0]], [-1], ("a",))


def test_select_columns_order_and_unknown():
    mat = small()
    sub = mat.select_columns(["c", "a"])
    assert sub.column_names == ("c", "a")
    assert np.array_equal(sub.values, mat.values[:, [2, 0]])
    with pytest.raises(InputError, match=r"unknown columns: \['z'\]"):
        mat.select_columns(["a", "z"])


def test_take_rows_and_drop_undefined():
    mat = small()
    taken = mat.take_rows([2, 0])
    assert np.array_equal(taken.labels, [0, 0])
    assert np.array_equal(taken.values[0], mat.values[2])

    dirty = FeatureMatrix([[1.0, np.nan], [2.0, 3.0], [np.inf, 0.0]],
                          [0, 1, 0], ("a", "b"))
    assert not dirty.is_finite()
    clean, dropped = dirty.drop_undefined()
    assert dropped == 2
    assert clean.m == 1
    assert np.array_equal(clean.values, [[2.0, 3.0]])


def test_minmax_matches_reference():
    rng = np.random.default_rng(7)
    values = rng.normal(3.0, 10.0, (40, 5))
    mat = FeatureMatrix(values, rng.integers(0, 2, 40), tuple("abcde"))
    scaled, scaler = normalize(mat, "minmax")
    assert np.array_equal(scaled.values, minmax_ref(values))
    assert scaled.values.min() == 0.0 and scaled.values.max() == 1.0
    assert scaler.method == "minmax"
    assert scaler.constant_columns == ()

    # the fitted scaler reproduces the training transform on the same rows
    again = scaler.transform(mat)
    assert np.array_equal(again.values, scaled.values)


def test_zscore_moments():
    rng = np.random.default_rng(8)
    mat = FeatureMatrix(rng.normal(5.0, 2.0, (200, 3)),
                        rng.integers(0, 2, 200), ("a", "b", "c"))
    scaled, _ = normalize(mat, "zscore")
    assert np.allclose(scaled.values.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(scaled.values.std(axis=0, ddof=1), 1.0, atol=1e-12)


def test_constant_column_warns_and_zeros():
    mat = FeatureMatrix([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]],
                        [0, 1, 0], ("a", "b"))
    with pytest.warns(ConstantColumnWarning, match=r"\['b'\]"):
        scaled, scaler = normalize(mat, "minmax")
    assert scaler.constant_columns == ("b",)
    assert np.array_equal(scaled.values[:, 1], [0.0, 0.0, 0.0])
    assert np.array_equal(scaled.values[:, 0], [0.0, 0.5, 1.0])


def test_single_row_zscore_is_all_constant():
    mat = FeatureMatrix([[3.0, 4.0]], [0], ("a", "b"))
    with pytest.warns(ConstantColumnWarning):
        scaled, _ = normalize(mat, "zscore")
    assert np.array_equal(scaled.values, [[0.0, 0.0]])


def test_none_is_identity():
    mat = small()
    same, scaler = normalize(mat, "none")
    assert same.values is mat.values
    assert scaler.transform(mat).values is mat.values


def test_normalize_rejects_bad_input():
    with pytest.raises(InputError, match="unknown normalization"):
        normalize(small(), "standard")
    with pytest.raises(InputError, match="empty"):
        normalize(FeatureMatrix(np.empty((0, 1)), [], ("a",)), "minmax")
    dirty = FeatureMatrix([[np.nan]], [0], ("a",))
    with pytest.raises(InputError, match="NaN/Inf"):
        normalize(dirty, "minmax")


def test_scaler_refuses_other_columns():
    _, scaler = normalize(small(), "minmax")
    other = FeatureMatrix([[1.0, 2.0]], [0], ("a", "b"))
    with pytest.raises(InputError, match="fitted on"):
        scaler.transform(other)


def test_dataframe_round_trip(tmp_path):
    mat = small()
    frame = to_dataframe(mat)
    assert list(frame.columns) == ["a", "b", "c", "label"]
    back = from_dataframe(frame)
    assert np.array_equal(back.values, mat.values)
    assert np.array_equal(back.labels, mat.labels)
    assert back.column_names == mat.column_names

    path = tmp_path / "features.csv"
    save_csv(mat, path)
    loaded = load_csv(path)
    assert np.array_equal(loaded.values, mat.values)
    assert np.array_equal(loaded.labels, mat.labels)


def test_from_dataframe_label_checks():
    frame = to_dataframe(small())
    with pytest.raises(InputError, match="missing 'label'"):
        from_dataframe(frame.drop(columns=["label"]))

    frame_bad = frame.copy()
    frame_bad["label"] = [0.5, 1.0, 0.0]
    with pytest.raises(InputError, match="hold integers"):
        from_dataframe(frame_bad)

    frame_nan = frame.copy()
    frame_nan.loc[0, "label"] = np.nan
    with pytest.raises(InputError, match="undefined"):
        from_dataframe(frame_nan)


def test_load_csv_rejects_text_column(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,label\nx,0\ny,1\n")
    with pytest.raises(InputError, match="non-numeric feature column 'a'"):
        load_csv(path)
