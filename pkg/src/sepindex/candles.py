"""Minute-bar OHLCV series: CSV ingestion and gap repair.

Ingestion is strict: every row must parse, bars must be shape-valid
(low <= open/close <= high, volume >= 0), timestamps must use one format for
the whole file.  Duplicated timestamps keep the last occurrence; rows are
sorted; gaps up to a configured width are filled by linear interpolation of
the price track with zero volume, and every filled range is reported.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import InputError

BAR_MS = 60_000  # one minute

CSV_COLUMNS = ("timestamp", "open", "high", "low", "close", "volume")


@dataclass(frozen=True)
class CandleSeries:
    """Strictly increasing minute bars, timestamps in epoch milliseconds."""

    timestamp: np.ndarray
    open: np.ndarray
    high: np.ndarray
    low: np.ndarray
    close: np.ndarray
    volume: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.timestamp, dtype=np.int64)
        object.__setattr__(self, "timestamp", ts)
        for name in CSV_COLUMNS[1:]:
            field = np.asarray(getattr(self, name), dtype=np.float64)
            if field.shape != ts.shape:
                raise InputError(f"{name} misaligned with timestamps")
            object.__setattr__(self, name, field)
        if ts.size > 1 and not (np.diff(ts) > 0).all():
            raise InputError("timestamps must be strictly increasing")

    def __len__(self) -> int:
        return int(self.timestamp.size)

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame({name: getattr(self, name) for name in CSV_COLUMNS})


@dataclass(frozen=True)
class RepairRange:
    """One contiguous run of synthesized bars."""

    start_ts: int
    end_ts: int
    bars_filled: int


@dataclass(frozen=True)
class RepairReport:
    ranges: tuple[RepairRange, ...]
    total_filled: int

    def to_dict(self) -> dict:
        return {
            "total_filled": self.total_filled,
            "ranges": [
                {"start_ts": r.start_ts, "end_ts": r.end_ts, "bars_filled": r.bars_filled}
                for r in self.ranges
            ],
        }


def _fail_row(frame_index: int, message: str) -> InputError:
    # +2: one for the header line, one for 1-based numbering
    return InputError(f"row {frame_index + 2}: {message}")


def _parse_timestamps(raw: pd.Series) -> np.ndarray:
    """Accept either epoch milliseconds or ISO-8601, but not a mixture."""
    text = raw.astype(str).str.strip()
    blank = text.eq("") | text.str.lower().isin(("nan", "none"))
    if blank.any():
        raise _fail_row(int(np.flatnonzero(blank)[0]), "empty timestamp")

    int_like = text.str.fullmatch(r"-?\d+")
    if int_like.all():
        return text.astype(np.int64).to_numpy()
    if int_like.any():
        bad = int(np.flatnonzero(~int_like)[0])
        raise _fail_row(bad, "mixed timestamp formats (epoch ms and ISO-8601)")

    parsed = pd.to_datetime(text, format="ISO8601", errors="coerce", utc=True)
    if parsed.isna().any():
        bad = int(np.flatnonzero(parsed.isna())[0])
        raise _fail_row(bad, f"unparseable timestamp {text.iloc[bad]!r}")
    return (parsed.astype("int64") // 1_000_000).to_numpy()


def ingest_csv(path) -> CandleSeries:
    """Load an OHLCV CSV, validating every row.

    The header must contain exactly timestamp, open, high, low, close, volume.
    Errors name the offending row (1-based line number including the header).
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc

    have = list(frame.columns)
    if sorted(have) != sorted(CSV_COLUMNS):
        raise InputError(f"expected columns {list(CSV_COLUMNS)}, found {have}")
    if len(frame) == 0:
        raise InputError(f"{path} has a header but no rows")

    timestamps = _parse_timestamps(frame["timestamp"])

    fields = {}
    for name in CSV_COLUMNS[1:]:
        numeric = pd.to_numeric(frame[name].str.strip(), errors="coerce")
        bad = ~np.isfinite(numeric.to_numpy(dtype=np.float64, na_value=np.nan))
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise _fail_row(row, f"malformed {name} value {frame[name].iloc[row]!r}")
        fields[name] = numeric.to_numpy(dtype=np.float64)

    high, low = fields["high"], fields["low"]
    body_top = np.maximum(fields["open"], fields["close"])
    body_bot = np.minimum(fields["open"], fields["close"])
    bad_shape = (high < low) | (body_top > high) | (body_bot < low)
    if bad_shape.any():
        row = int(np.flatnonzero(bad_shape)[0])
        raise _fail_row(row, "bar violates low <= open/close <= high")
    if (fields["volume"] < 0).any():
        row = int(np.flatnonzero(fields["volume"] < 0)[0])
        raise _fail_row(row, "negative volume")

    # stable sort, then keep the last occurrence of each duplicated timestamp
    order = np.argsort(timestamps, kind="stable")
    timestamps = timestamps[order]
    keep = np.ones(timestamps.size, dtype=bool)
    keep[:-1] = timestamps[:-1] != timestamps[1:]
    return CandleSeries(
        timestamps[keep],
        *(fields[name][order][keep] for name in CSV_COLUMNS[1:]),
    )


def repair_gaps(series: CandleSeries,
                max_gap_minutes: int = 120) -> tuple[CandleSeries, RepairReport]:
    """Fill missing minutes by linear interpolation of each price field.

    Synthesized bars carry zero volume.  Refuses gaps wider than
    ``max_gap_minutes`` and spacings that do not sit on the minute grid.
    """
    if len(series) < 2:
        raise InputError(f"gap repair needs at least 2 bars, got {len(series)}")
    deltas = np.diff(series.timestamp)
    off_grid = deltas % BAR_MS != 0
    if off_grid.any():
        at = int(np.flatnonzero(off_grid)[0])
        raise InputError(
            f"spacing of {int(deltas[at])} ms after ts={int(series.timestamp[at])} "
            f"is not a whole number of minutes"
        )
    gap_bars = deltas // BAR_MS - 1
    too_wide = gap_bars > max_gap_minutes
    if too_wide.any():
        at = int(np.flatnonzero(too_wide)[0])
        raise InputError(
            f"gap of {int(gap_bars[at])} missing bars after ts={int(series.timestamp[at])} "
            f"exceeds max_gap_minutes={max_gap_minutes}"
        )

    grid = np.arange(series.timestamp[0], series.timestamp[-1] + BAR_MS, BAR_MS,
                     dtype=np.int64)
    real = np.zeros(grid.size, dtype=bool)
    real[(series.timestamp - grid[0]) // BAR_MS] = True

    # np.interp passes through the real bars exactly and is linear between them
    t_real = series.timestamp.astype(np.float64)
    t_grid = grid.astype(np.float64)
    prices = {
        name: np.interp(t_grid, t_real, getattr(series, name))
        for name in ("open", "high", "low", "close")
    }
    volume = np.zeros(grid.size)
    volume[real] = series.volume

    repaired = CandleSeries(grid, prices["open"], prices["high"], prices["low"],
                            prices["close"], volume)

    ranges = []
    synth = np.flatnonzero(~real)
    if synth.size:
        breaks = np.flatnonzero(np.diff(synth) > 1)
        starts = np.concatenate(([0], breaks + 1))
        ends = np.concatenate((breaks, [synth.size - 1]))
        for s, e in zip(starts, ends):
            ranges.append(RepairRange(
                start_ts=int(grid[synth[s]]),
                end_ts=int(grid[synth[e]]),
                bars_filled=int(e - s + 1),
            ))
    report = RepairReport(tuple(ranges), int(synth.size))
    return repaired, report
