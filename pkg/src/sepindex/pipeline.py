"""Feature assembly: indicator table, lags, labels, observation-set grouping.

The pipeline turns a repaired minute-bar series into a labeled feature frame:

    OHLCV columns + configured indicator columns
      -> optional lagged copies of every column
      -> direction / magnitude labels from the next close
      -> rows with any undefined feature dropped (counted, never filled)

Every step is causal: a row's features depend only on bars at or before it,
and its labels only on the next bar's close.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from . import indicators as ind
from .candles import CandleSeries
from .errors import InputError
from .labeling import LabeledFrame, MagnitudeStats, build_lags, bucket_magnitude, label_rows
from .matrix import FeatureMatrix
from .selection import ObservationSet

OHLCV_COLUMNS = ("open", "high", "low", "close", "volume")

MS_PER_HOUR = 3_600_000


@dataclass(frozen=True)
class IndicatorConfig:
    """Parameters for every indicator column the pipeline can emit.

    ``safe_dump_threshold`` has no sensible universal default and must be set
    explicitly.  ``enabled`` limits the emitted indicator columns to the named
    subset (None means all).
    """

    safe_dump_threshold: float
    ema_periods: tuple[int, ...] = (8, 50, 100, 200)
    cti_periods: tuple[int, ...] = (12, 40)
    willr_periods: tuple[int, ...] = (96, 480)
    roc_period: int = 1
    rsi_period: int = 14
    crsi_params: tuple[int, int, int] = (3, 2, 100)
    cmf_period: int = 20
    t3_period: int = 5
    t3_volume_factor: float = 0.7
    ewo_fast: int = 5
    ewo_slow: int = 35
    ewo_ma: str = "sma"
    pct_change_window: int = 5
    low_window: int = 5
    low_shift: int = 1
    vwap_window: int = 14
    ema_seed: str = "sma"
    enabled: tuple[str, ...] | None = None

    def __post_init__(self):
        for name in ("ema_periods", "cti_periods", "willr_periods", "crsi_params"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.enabled is not None:
            object.__setattr__(self, "enabled", tuple(self.enabled))
        self.validate()

    def validate(self) -> None:
        periods = {
            "roc_period": self.roc_period,
            "rsi_period": self.rsi_period,
            "cmf_period": self.cmf_period,
            "t3_period": self.t3_period,
            "ewo_fast": self.ewo_fast,
            "ewo_slow": self.ewo_slow,
            "pct_change_window": self.pct_change_window,
            "low_window": self.low_window,
            "vwap_window": self.vwap_window,
        }
        for plist in ("ema_periods", "cti_periods", "willr_periods"):
            for i, p in enumerate(getattr(self, plist)):
                periods[f"{plist}[{i}]"] = p
        for i, p in enumerate(self.crsi_params):
            periods[f"crsi_params[{i}]"] = p
        for name, p in periods.items():
            if not isinstance(p, (int, np.integer)) or p < 1:
                raise InputError(f"{name} must be an integer >= 1, got {p!r}")
        if min(self.cti_periods, default=2) < 2:
            raise InputError("cti periods must be >= 2")
        if self.ewo_fast >= self.ewo_slow:
            raise InputError(f"ewo_fast must be below ewo_slow, "
                             f"got {self.ewo_fast} >= {self.ewo_slow}")
        if self.ewo_ma not in ("sma", "ema"):
            raise InputError(f"ewo_ma must be 'sma' or 'ema', got {self.ewo_ma!r}")
        if self.ema_seed not in ("sma", "first"):
            raise InputError(f"ema_seed must be 'sma' or 'first', got {self.ema_seed!r}")
        if not 0.0 < self.t3_volume_factor <= 1.0:
            raise InputError(f"t3_volume_factor must be in (0, 1], "
                             f"got {self.t3_volume_factor}")
        if self.low_shift < 0:
            raise InputError(f"low_shift must be >= 0, got {self.low_shift}")
        if not np.isfinite(self.safe_dump_threshold):
            raise InputError("safe_dump_threshold must be a finite number")
        if self.enabled is not None:
            known = set(self.column_names(all_columns=True))
            unknown = [c for c in self.enabled if c not in known]
            if unknown:
                raise InputError(f"unknown indicator columns enabled: {unknown}")

    def column_names(self, all_columns: bool = False) -> list[str]:
        """Indicator column names this config emits, in a fixed order."""
        names = [f"ema_{p}" for p in self.ema_periods]
        names += [f"cti_{p}" for p in self.cti_periods]
        names += [f"r_{p}" for p in self.willr_periods]
        names += ["roc", "rsi", "crsi", "cmf", "t3", "ewo",
                  f"h1_prc_change_{self.pct_change_window}",
                  f"low_{self.low_window}", "safe_dump", "vwap"]
        if all_columns or self.enabled is None:
            return names
        return [c for c in names if c in self.enabled]


def hourly_feature(series: CandleSeries, window: int) -> np.ndarray:
    """Largest relative close change over the trailing ``window`` hourly bars,
    mapped back to minute rows.

    Minute rows carry the value of the last completed hour (a partial leading
    hour still closes when the next hour starts), so no row sees a close from
    its own, still-open hour.
    """
    bucket = series.timestamp // MS_PER_HOUR
    new_bucket = np.diff(bucket) != 0
    last_rows = np.append(np.flatnonzero(new_bucket), len(series) - 1)
    hourly_close = series.close[last_rows]
    hourly_value = ind.rolling_pct_change_max(hourly_close, window)

    ordinal = np.concatenate(([0], np.cumsum(new_bucket)))
    out = np.full(len(series), np.nan)
    has_history = ordinal >= 1
    out[has_history] = hourly_value[ordinal[has_history] - 1]
    return out


def indicator_table(series: CandleSeries, config: IndicatorConfig) -> pd.DataFrame:
    """All enabled indicator columns for a repaired series."""
    wanted = set(config.column_names())
    builders = {}
    for p in config.ema_periods:
        builders[f"ema_{p}"] = lambda p=p: ind.ema(series.close, p, config.ema_seed)
    for p in config.cti_periods:
        builders[f"cti_{p}"] = lambda p=p: ind.cti(series.close, p)
    for p in config.willr_periods:
        builders[f"r_{p}"] = lambda p=p: ind.williams_r(
            series.high, series.low, series.close, p)
    builders["roc"] = lambda: ind.roc(series.close, config.roc_period)
    builders["rsi"] = lambda: ind.rsi(series.close, config.rsi_period)
    builders["crsi"] = lambda: ind.connors_rsi(series.close, *config.crsi_params)
    builders["cmf"] = lambda: ind.cmf(series.high, series.low, series.close,
                                      series.volume, config.cmf_period)
    builders["t3"] = lambda: ind.t3(series.close, config.t3_period,
                                    config.t3_volume_factor)
    builders["ewo"] = lambda: ind.ewo(series.close, config.ewo_fast,
                                      config.ewo_slow, config.ewo_ma)

    h1_name = f"h1_prc_change_{config.pct_change_window}"
    h1_cache: dict[str, np.ndarray] = {}

    def h1_column() -> np.ndarray:
        if "value" not in h1_cache:
            h1_cache["value"] = hourly_feature(series, config.pct_change_window)
        return h1_cache["value"]

    builders[h1_name] = h1_column
    builders[f"low_{config.low_window}"] = lambda: ind.rolling_low(
        series.low, config.low_window, config.low_shift)
    builders["safe_dump"] = lambda: ind.safe_dump_flag(
        h1_column(), config.safe_dump_threshold)
    builders["vwap"] = lambda: ind.rolling_vwap(
        series.high, series.low, series.close, series.volume, config.vwap_window)

    data = {name: make() for name, make in builders.items() if name in wanted}
    return pd.DataFrame(data, columns=[c for c in config.column_names() if c in data])


def base_frame(series: CandleSeries, config: IndicatorConfig) -> pd.DataFrame:
    """OHLCV columns followed by the enabled indicator columns."""
    frame = series.to_dataframe().drop(columns=["timestamp"])
    table = indicator_table(series, config)
    for col in table.columns:
        frame[col] = table[col].to_numpy()
    return frame


def label_frame(series: CandleSeries, features: FeatureMatrix,
                stats: MagnitudeStats | None = None,
                train_rows: int | None = None) -> LabeledFrame:
    """Attach direction and magnitude labels to features aligned with bars.

    Row t is labeled by close[t+1] - close[t]; the final row is dropped.
    Bucket geometry is fitted on the first ``train_rows`` labeled rows unless
    ``stats`` is supplied.
    """
    if features.m != len(series):
        raise InputError(
            f"features have {features.m} rows but the series has {len(series)} bars")
    direction, magnitude, change, stats = label_rows(series.close, train_rows, stats)
    labeled = FeatureMatrix(features.values[:-1], direction, features.column_names)
    return LabeledFrame(labeled, magnitude, change, stats)


@dataclass(frozen=True)
class FeatureBuildReport:
    """What the pipeline did: row accounting and bucket geometry."""

    rows_in: int
    rows_after_lags: int
    rows_dropped_undefined: int
    rows_final: int
    column_names: tuple[str, ...]
    stats: MagnitudeStats
    stats_train_rows: int

    def to_dict(self) -> dict:
        return {
            "rows_in": self.rows_in,
            "rows_after_lags": self.rows_after_lags,
            "rows_dropped_undefined": self.rows_dropped_undefined,
            "rows_final": self.rows_final,
            "n_columns": len(self.column_names),
            "column_names": list(self.column_names),
            "magnitude_stats": self.stats.to_dict(),
            "stats_train_rows": self.stats_train_rows,
        }


def build_labeled_features(series: CandleSeries, config: IndicatorConfig,
                           lags=(), train_fraction: float = 1.0,
                           stats: MagnitudeStats | None = None
                           ) -> tuple[LabeledFrame, FeatureBuildReport]:
    """The full feature stage: indicators, lags, labels, undefined-row drop.

    ``train_fraction`` bounds the rows used to fit magnitude-bucket geometry
    (the leading fraction of the cleaned frame), so held-out rows never shape
    the buckets.  Pass ``stats`` to reuse geometry fitted elsewhere.
    """
    if not 0.0 < train_fraction <= 1.0:
        raise InputError(f"train_fraction must be in (0, 1], got {train_fraction}")
    frame = base_frame(series, config)
    names = tuple(frame.columns)
    values = frame.to_numpy(dtype=np.float64)
    rows_in = len(series)

    closes = series.close
    if lags:
        placeholder = FeatureMatrix(values, np.zeros(values.shape[0], dtype=np.int64),
                                    names)
        lagged = build_lags(placeholder, lags)
        values, names = lagged.values, lagged.column_names
        closes = closes[max(int(k) for k in lags):]
    rows_after_lags = values.shape[0]

    if rows_after_lags < 2:
        raise InputError("fewer than 2 rows left after lagging; series too short")
    change = np.diff(closes)
    direction = (change > 0).astype(np.int64)
    values = values[:-1]

    keep = np.isfinite(values).all(axis=1)
    dropped = int(values.shape[0] - keep.sum())
    values, direction, change = values[keep], direction[keep], change[keep]
    if values.shape[0] < 2:
        raise InputError("fewer than 2 defined rows after dropping undefined features")

    if stats is None:
        # floor, matching the chronological split's training-row arithmetic
        stats_rows = max(int(train_fraction * values.shape[0]), 1)
        stats = MagnitudeStats.from_changes(change[:stats_rows])
    else:
        stats_rows = 0
    magnitude = bucket_magnitude(change, stats)

    labeled = LabeledFrame(FeatureMatrix(values, direction, names), magnitude,
                           change, stats)
    report = FeatureBuildReport(
        rows_in=rows_in,
        rows_after_lags=rows_after_lags,
        rows_dropped_undefined=dropped,
        rows_final=labeled.m,
        column_names=names,
        stats=stats,
        stats_train_rows=stats_rows,
    )
    return labeled, report


def default_observation_sets(column_names, lags=()) -> list[ObservationSet]:
    """Group columns into the conventional sets: ohlcv, indicators, one set
    per lag depth."""
    names = list(column_names)
    suffixes = {f"_lag{int(k)}": int(k) for k in lags}
    by_lag: dict[int, list[str]] = {k: [] for k in suffixes.values()}
    base = []
    for c in names:
        for suffix, k in suffixes.items():
            if c.endswith(suffix):
                by_lag[k].append(c)
                break
        else:
            base.append(c)
    ohlcv = [c for c in base if c in OHLCV_COLUMNS]
    other = [c for c in base if c not in OHLCV_COLUMNS]
    sets = []
    if ohlcv:
        sets.append(ObservationSet("ohlcv", tuple(ohlcv)))
    if other:
        sets.append(ObservationSet("indicators", tuple(other)))
    for k in sorted(by_lag):
        if by_lag[k]:
            sets.append(ObservationSet(f"lag_{k}", tuple(by_lag[k])))
    return sets
