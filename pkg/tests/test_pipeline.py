import numpy as np
import pytest

from sepindex import indicators as ind
from sepindex.errors import InputError
from sepindex.pipeline import (IndicatorConfig, base_frame,
                               build_labeled_features,
                               default_observation_sets, hourly_feature,
                               indicator_table, label_frame)
from sepindex.synth import persistent_trend_candles, white_noise_candles

THRESHOLD = -0.05


def config(**kwargs):
    return IndicatorConfig(safe_dump_threshold=THRESHOLD, **kwargs)


ALL_COLUMNS = ["ema_8", "ema_50", "ema_100", "ema_200", "cti_12", "cti_40",
               "r_96", "r_480", "roc", "rsi", "crsi", "cmf", "t3", "ewo",
               "h1_prc_change_5", "low_5", "safe_dump", "vwap"]


def test_default_column_roster():
    assert config().column_names() == ALL_COLUMNS
    trimmed = config(enabled=("roc", "rsi"))
    assert trimmed.column_names() == ["roc", "rsi"]
    assert trimmed.column_names(all_columns=True) == ALL_COLUMNS


def test_config_validation():
    with pytest.raises(InputError, match="rsi_period"):
        config(rsi_period=0)
    with pytest.raises(InputError, match="cti periods"):
        config(cti_periods=(1, 40))
    with pytest.raises(InputError, match="ewo_fast"):
        config(ewo_fast=35, ewo_slow=5)
    with pytest.raises(InputError, match="t3_volume_factor"):
        config(t3_volume_factor=0.0)
    with pytest.raises(InputError, match="ema_seed"):
        config(ema_seed="zero")
    with pytest.raises(InputError, match="unknown indicator columns"):
        config(enabled=("roc", "bogus"))
    with pytest.raises(InputError, match="safe_dump_threshold"):
        IndicatorConfig(safe_dump_threshold=float("nan"))
    with pytest.raises(InputError, match="low_shift"):
        config(low_shift=-1)


def test_hourly_feature_maps_completed_hours():
    series = persistent_trend_candles(400, seed=0)
    window = 2
    out = hourly_feature(series, window)

    # oracle: hourly closes are the last bar of each hour bucket; a minute
    # row carries the value of the hour before its own
    bucket = series.timestamp // 3_600_000
    uniq = np.unique(bucket)
    hourly_close = np.array(
        [series.close[bucket == b][-1] for b in uniq])
    hourly_val = ind.rolling_pct_change_max(hourly_close, window)
    by_bucket = {b: i for i, b in enumerate(uniq)}
    for t in range(len(series)):
        ordinal = by_bucket[bucket[t]]
        want = np.nan if ordinal == 0 else hourly_val[ordinal - 1]
        got = out[t]
        assert (np.isnan(want) and np.isnan(got)) or want == got


def test_hourly_feature_never_uses_open_hour():
    series = persistent_trend_candles(200, seed=1)
    out_full = hourly_feature(series, 2)
    # value at row t must be computable from bars strictly before t's hour
    bucket = series.timestamp // 3_600_000
    first_of_last = int(np.flatnonzero(bucket == bucket[-1])[0])
    assert np.array_equal(out_full[first_of_last:],
                          np.full(len(series) - first_of_last,
                                  out_full[first_of_last]),
                          equal_nan=True)


def test_indicator_table_column_order_and_subset():
    series = persistent_trend_candles(600, seed=2)
    table = indicator_table(series, config())
    assert list(table.columns) == ALL_COLUMNS
    sub = indicator_table(series, config(enabled=("rsi", "roc")))
    assert list(sub.columns) == ["roc", "rsi"]  # roster order, not enabled order
    assert np.array_equal(sub["rsi"].to_numpy(), table["rsi"].to_numpy(),
                          equal_nan=True)


def test_base_frame_prepends_ohlcv():
    series = persistent_trend_candles(300, seed=3)
    frame = base_frame(series, config(enabled=("roc",)))
    assert list(frame.columns) == ["open", "high", "low", "close", "volume", "roc"]
    assert np.array_equal(frame["close"].to_numpy(), series.close)


def test_label_frame_alignment():
    series = persistent_trend_candles(50, seed=4)
    cfg = config(enabled=("roc",))
    feats = base_frame(series, cfg)
    from sepindex.matrix import FeatureMatrix
    matrix = FeatureMatrix(feats.to_numpy(), np.zeros(len(series), dtype=int),
                           tuple(feats.columns))
    frame = label_frame(series, matrix)
    assert frame.m == len(series) - 1
    want_dir = (np.diff(series.close) > 0).astype(int)
    assert np.array_equal(frame.direction, want_dir)

    short = FeatureMatrix(np.zeros((3, 1)), np.zeros(3, dtype=int), ("x",))
    with pytest.raises(InputError, match="bars"):
        label_frame(series, short)


def test_build_labeled_features_row_accounting():
    series = persistent_trend_candles(800, seed=5)
    cfg = config()
    frame, report = build_labeled_features(series, cfg, lags=(1, 2))
    assert report.rows_in == 800
    assert report.rows_after_lags == 798
    assert report.rows_after_lags - 1 == report.rows_dropped_undefined + report.rows_final
    assert frame.m == report.rows_final
    assert frame.features.is_finite()
    assert report.column_names == frame.features.column_names
    assert frame.features.n == (5 + 18) * 3


def test_build_labeled_features_matches_direct_composition():
    series = persistent_trend_candles(700, seed=6)
    cfg = config(enabled=("roc", "rsi"))
    frame, _ = build_labeled_features(series, cfg, lags=(1,))

    table = base_frame(series, cfg).to_numpy()
    lagged = np.hstack([table[1:], table[:-1]])[:-1]
    change = np.diff(series.close)[1:]
    keep = np.isfinite(lagged).all(axis=1)
    assert np.array_equal(frame.features.values, lagged[keep])
    assert np.array_equal(frame.direction, (change[keep] > 0).astype(int))
    assert np.array_equal(frame.close_change, change[keep])


def test_build_labeled_features_stats_use_training_prefix():
    series = persistent_trend_candles(900, seed=7)
    cfg = config(enabled=("roc",))
    frame, report = build_labeled_features(series, cfg, train_fraction=0.7)
    stats_rows = max(int(0.7 * frame.m), 1)
    assert report.stats_train_rows == stats_rows
    fit = frame.close_change[:stats_rows]
    assert frame.stats.mean_positive == fit[fit > 0].mean()
    assert frame.stats.mean_negative == fit[fit < 0].mean()

    with pytest.raises(InputError, match="train_fraction"):
        build_labeled_features(series, cfg, train_fraction=0.0)


def test_build_labeled_features_reused_stats():
    series = white_noise_candles(400, seed=8)
    cfg = config(enabled=("roc",))
    stats = build_labeled_features(series, cfg)[0].stats
    frame, report = build_labeled_features(series, cfg, stats=stats)
    assert frame.stats == stats
    assert report.stats_train_rows == 0


def test_default_observation_sets_grouping():
    columns = ["open", "high", "low", "close", "volume", "roc", "rsi",
               "open_lag1", "roc_lag1", "open_lag2"]
    sets = default_observation_sets(columns, lags=(1, 2))
    by_name = {s.name: s.columns for s in sets}
    assert list(by_name) == ["ohlcv", "indicators", "lag_1", "lag_2"]
    assert by_name["ohlcv"] == ("open", "high", "low", "close", "volume")
    assert by_name["indicators"] == ("roc", "rsi")
    assert by_name["lag_1"] == ("open_lag1", "roc_lag1")
    assert by_name["lag_2"] == ("open_lag2",)

    no_lags = default_observation_sets(["close", "roc"])
    assert [s.name for s in no_lags] == ["ohlcv", "indicators"]


def test_feature_prefix_is_causal():
    series = persistent_trend_candles(500, seed=9)
    cfg = config()
    cut = 420
    prefix = persistent_trend_candles(500, seed=9)
    truncated = type(series)(
        prefix.timestamp[:cut], prefix.open[:cut], prefix.high[:cut],
        prefix.low[:cut], prefix.close[:cut], prefix.volume[:cut])
    full = base_frame(series, cfg).to_numpy()
    head = base_frame(truncated, cfg).to_numpy()
    assert np.array_equal(full[:cut], head, equal_nan=True)
