"""Technical indicators over minute-bar arrays.

Every function takes 1-D float arrays and returns a float64 array of the same
length, with NaN marking warm-up rows and anything else that is undefined.
Nothing here back-fills or peeks forward: output at index t depends only on
inputs at indices <= t.  Degenerate windows (zero range, zero volume, zero
price) produce the documented fallback value and a DegenerateInputWarning.
"""

from __future__ import annotations

import warnings

import numpy as np
import pandas as pd

from .errors import DegenerateInputWarning, InputError


def _series(values) -> pd.Series:
    return pd.Series(np.asarray(values, dtype=np.float64))


def _check_period(period: int, name: str = "period", minimum: int = 1) -> None:
    if not isinstance(period, (int, np.integer)) or period < minimum:
        raise InputError(f"{name} must be an integer >= {minimum}, got {period!r}")


def _warn_degenerate(what: str, count: int) -> None:
    if count:
        warnings.warn(f"{what} in {count} window(s)", DegenerateInputWarning,
                      stacklevel=3)


def _recursive_ma(values: np.ndarray, alpha: float, warmup: int) -> np.ndarray:
    """Exponential recursion y_t = alpha*x_t + (1-alpha)*y_{t-1}, seeded with
    the simple mean of the first ``warmup`` defined values.

    Leading NaNs are skipped; the output is NaN until the seed is complete.
    """
    x = _series(values)
    first = x.first_valid_index()
    out = pd.Series(np.nan, index=x.index)
    if first is None or len(x) - first < warmup:
        return out.to_numpy()
    seeded = x.copy()
    seeded.iloc[first:first + warmup] = np.nan
    seeded.iloc[first + warmup - 1] = x.iloc[first:first + warmup].mean()
    smoothed = seeded.ewm(alpha=alpha, adjust=False, ignore_na=True).mean()
    out.iloc[first + warmup - 1:] = smoothed.iloc[first + warmup - 1:]
    return out.to_numpy()


def ema(values, period: int, seed: str = "sma") -> np.ndarray:
    """Exponential moving average, alpha = 2/(period+1).

    seed="sma" (default) starts the recursion at the simple mean of the first
    ``period`` values, leaving the first period-1 outputs undefined;
    seed="first" starts at the first value itself.
    """
    _check_period(period)
    x = np.asarray(values, dtype=np.float64)
    alpha = 2.0 / (period + 1)
    if seed == "sma":
        return _recursive_ma(x, alpha, period)
    if seed == "first":
        return _recursive_ma(x, alpha, 1)
    raise InputError(f"ema seed must be 'sma' or 'first', got {seed!r}")


def sma(values, period: int) -> np.ndarray:
    _check_period(period)
    return _series(values).rolling(period).mean().to_numpy()


def roc(values, period: int = 1) -> np.ndarray:
    """Rate of change in percent: 100 * (v_t - v_{t-p}) / v_{t-p}."""
    _check_period(period)
    x = np.asarray(values, dtype=np.float64)
    out = np.full(x.shape, np.nan)
    prev = x[:-period]
    cur = x[period:]
    zero = prev == 0.0
    _warn_degenerate("rate of change over a zero price", int(np.count_nonzero(zero)))
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = 100.0 * (cur - prev) / prev
    rel[zero] = np.nan
    out[period:] = rel
    return out


def rsi(values, period: int = 14) -> np.ndarray:
    """Wilder RSI: smoothed gains/losses with alpha = 1/period.

    All-gain windows read 100, all-loss windows 0, and a flat window
    (no movement at all) reads the neutral 50.
    """
    _check_period(period)
    x = np.asarray(values, dtype=np.float64)
    delta = np.full(x.shape, np.nan)
    delta[1:] = x[1:] - x[:-1]
    gain = np.where(np.isnan(delta), np.nan, np.maximum(delta, 0.0))
    loss = np.where(np.isnan(delta), np.nan, np.maximum(-delta, 0.0))
    avg_gain = _recursive_ma(gain, 1.0 / period, period)
    avg_loss = _recursive_ma(loss, 1.0 / period, period)
    out = np.full(x.shape, np.nan)
    defined = ~np.isnan(avg_gain) & ~np.isnan(avg_loss)
    g, l = avg_gain[defined], avg_loss[defined]
    with np.errstate(divide="ignore", invalid="ignore"):
        val = 100.0 - 100.0 / (1.0 + g / l)
    val[l == 0.0] = np.where(g[l == 0.0] == 0.0, 50.0, 100.0)
    out[defined] = val
    return out


def williams_r(high, low, close, period: int = 14) -> np.ndarray:
    """Williams %R in [-100, 0]; a flat window reads 0 and is flagged."""
    _check_period(period)
    h = _series(high).rolling(period).max()
    l = _series(low).rolling(period).min()
    c = _series(close)
    span = (h - l).to_numpy()
    defined = ~np.isnan(span)
    flat = defined & (span == 0.0)
    _warn_degenerate("flat high-low window in Williams %R", int(np.count_nonzero(flat)))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -100.0 * (h.to_numpy() - c.to_numpy()) / span
    out[flat] = 0.0
    return out


def cti(values, period: int = 20, chunk: int = 262_144) -> np.ndarray:
    """Correlation Trend Indicator: rolling Pearson correlation between the
    window's values and a straight line, in [-1, 1].

    Zero-variance windows read 0 and are flagged.  Computed exactly (two-pass
    per window) in row chunks to bound memory.
    """
    _check_period(period, minimum=2)
    x = np.asarray(values, dtype=np.float64)
    out = np.full(x.shape, np.nan)
    if x.size < period:
        return out

    t = np.arange(period, dtype=np.float64)
    t -= t.mean()
    t_norm = np.sqrt((t * t).sum())

    windows = np.lib.stride_tricks.sliding_window_view(x, period)
    n_win = windows.shape[0]
    flat_count = 0
    for start in range(0, n_win, chunk):
        w = windows[start:start + chunk]
        centered = w - w.mean(axis=1, keepdims=True)
        num = centered @ t
        den = np.sqrt((centered * centered).sum(axis=1)) * t_norm
        zero = den == 0.0
        has_nan = np.isnan(w).any(axis=1)
        flat_count += int(np.count_nonzero(zero & ~has_nan))
        with np.errstate(divide="ignore", invalid="ignore"):
            r = num / den
        r[zero] = 0.0
        r[has_nan] = np.nan
        out[period - 1 + start:period - 1 + start + w.shape[0]] = r
    _warn_degenerate("zero-variance window in CTI", flat_count)
    return out


def streaks(values) -> np.ndarray:
    """Signed run length of consecutive up/down closes; 0 on an unchanged
    close; undefined at the first bar."""
    x = _series(values)
    sign = np.sign(x.diff())
    run = (sign != sign.shift()).cumsum()
    length = sign.groupby(run).cumcount() + 1
    out = (sign * length).to_numpy()
    return out


def percent_rank(values, window: int = 100) -> np.ndarray:
    """Share (in percent) of the previous ``window`` values strictly below
    the current one."""
    _check_period(window)
    x = np.asarray(values, dtype=np.float64)
    out = np.full(x.shape, np.nan)
    if x.size <= window:
        return out
    spans = np.lib.stride_tricks.sliding_window_view(x, window + 1)
    past, current = spans[:, :-1], spans[:, -1:]
    count = (past < current).sum(axis=1)
    rank = 100.0 * count / window
    rank[np.isnan(spans).any(axis=1)] = np.nan
    out[window:] = rank
    return out


def connors_rsi(values, rsi_period: int = 3, streak_period: int = 2,
                rank_window: int = 100) -> np.ndarray:
    """Connors RSI: mean of a short RSI, an RSI of the streak series, and the
    percent rank of the one-bar rate of change."""
    price_rsi = rsi(values, rsi_period)
    streak_rsi = rsi(streaks(values), streak_period)
    rank = percent_rank(roc(values, 1), rank_window)
    return (price_rsi + streak_rsi + rank) / 3.0


def cmf(high, low, close, volume, period: int = 20) -> np.ndarray:
    """Chaikin Money Flow in [-1, 1]; zero-volume windows read 0, flagged;
    flat bars contribute a zero multiplier."""
    _check_period(period)
    h, l, c = (np.asarray(a, dtype=np.float64) for a in (high, low, close))
    v = np.asarray(volume, dtype=np.float64)
    span = h - l
    with np.errstate(divide="ignore", invalid="ignore"):
        multiplier = ((c - l) - (h - c)) / span
    multiplier[span == 0.0] = 0.0
    flow = pd.Series(multiplier * v).rolling(period).sum()
    total = pd.Series(v).rolling(period).sum()
    total_np = total.to_numpy()
    zero = ~np.isnan(total_np) & (total_np == 0.0)
    _warn_degenerate("zero-volume window in CMF", int(np.count_nonzero(zero)))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (flow / total).to_numpy()
    out[zero] = 0.0
    return out


def t3(values, period: int = 5, volume_factor: float = 0.7) -> np.ndarray:
    """Tillson T3: a weighted blend of six cascaded EMAs.

    With volume factor v the blend weights are -v^3, 3v^2 + 3v^3,
    -6v^2 - 3v - 3v^3 and 1 + 3v + 3v^2 + v^3 on EMA6..EMA3; they sum to 1,
    so a constant input reproduces itself once defined.
    """
    _check_period(period)
    if not 0.0 < volume_factor <= 1.0:
        raise InputError(f"volume_factor must be in (0, 1], got {volume_factor}")
    e = np.asarray(values, dtype=np.float64)
    chain = []
    for _ in range(6):
        e = ema(e, period)
        chain.append(e)
    v = volume_factor
    c1 = -(v ** 3)
    c2 = 3.0 * v ** 2 + 3.0 * v ** 3
    c3 = -6.0 * v ** 2 - 3.0 * v - 3.0 * v ** 3
    c4 = 1.0 + 3.0 * v + 3.0 * v ** 2 + v ** 3
    return c1 * chain[5] + c2 * chain[4] + c3 * chain[3] + c4 * chain[2]


def ewo(close, fast: int = 5, slow: int = 35, ma: str = "sma") -> np.ndarray:
    """Elliott Wave Oscillator: (MA_fast - MA_slow) / close * 100, with simple
    (default) or exponential moving averages."""
    _check_period(fast)
    _check_period(slow)
    if fast >= slow:
        raise InputError(f"fast period must be below slow, got {fast} >= {slow}")
    if ma not in ("sma", "ema"):
        raise InputError(f"ewo ma must be 'sma' or 'ema', got {ma!r}")
    c = np.asarray(close, dtype=np.float64)
    kind = sma if ma == "sma" else ema
    zero = c == 0.0
    _warn_degenerate("zero close under EWO", int(np.count_nonzero(zero)))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (kind(c, fast) - kind(c, slow)) / c * 100.0
    out[zero] = np.nan
    return out


def rolling_pct_change_max(values, window: int = 3) -> np.ndarray:
    """Largest relative change versus any of the previous ``window`` values:
    max over k in 1..window of (v_t - v_{t-k}) / v_{t-k}."""
    _check_period(window)
    x = np.asarray(values, dtype=np.float64)
    out = np.full(x.shape, np.nan)
    if x.size <= window:
        return out
    zero_base = 0
    best = None
    for k in range(1, window + 1):
        prev = x[window - k:-k]
        zero = prev == 0.0
        zero_base += int(np.count_nonzero(zero))
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = (x[window:] - prev) / prev
        rel[zero] = np.nan
        best = rel if best is None else np.maximum(best, rel)  # NaN propagates
    _warn_degenerate("relative change over a zero value", zero_base)
    out[window:] = best
    return out


def rolling_low(values, window: int, shift: int = 0) -> np.ndarray:
    """Minimum over the trailing window, optionally shifted back in time."""
    _check_period(window)
    if shift < 0:
        raise InputError(f"shift must be >= 0, got {shift}")
    low = _series(values).rolling(window).min()
    if shift:
        low = low.shift(shift)
    return low.to_numpy()


def safe_dump_flag(pct_change, threshold: float) -> np.ndarray:
    """1.0 where the relative change stays at or below the threshold, else 0;
    NaN where the input is undefined."""
    x = np.asarray(pct_change, dtype=np.float64)
    out = np.where(x <= threshold, 1.0, 0.0)
    out[np.isnan(x)] = np.nan
    return out


def rolling_vwap(high, low, close, volume, window: int = 14) -> np.ndarray:
    """Rolling volume-weighted typical price; zero-volume windows are NaN,
    flagged."""
    _check_period(window)
    h, l, c = (np.asarray(a, dtype=np.float64) for a in (high, low, close))
    v = np.asarray(volume, dtype=np.float64)
    typical = (h + l + c) / 3.0
    weighted = pd.Series(typical * v).rolling(window).sum()
    total = pd.Series(v).rolling(window).sum()
    total_np = total.to_numpy()
    zero = ~np.isnan(total_np) & (total_np == 0.0)
    _warn_degenerate("zero-volume window in VWAP", int(np.count_nonzero(zero)))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (weighted / total).to_numpy()
    out[zero] = np.nan
    return out
