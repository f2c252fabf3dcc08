"""Independent oracles the tests compare the library against.

Everything here is written from the definitions with plain loops, never by
calling back into the package, so an agreeing result means two separate
implementations agree.
"""

from __future__ import annotations

import numpy as np

from sepindex.matrix import FeatureMatrix


def brute_sq_distances(values: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances by the literal double loop."""
    m = values.shape[0]
    out = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            diff = values[i] - values[j]
            out[i, j] = float((diff * diff).sum())
    return out


def brute_nearest(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per row: index and squared distance of the nearest other row.

    Expands (x_i - x_j)^2 directly (no inner-product shortcut); ties go to
    the lowest index because argmin keeps the first occurrence.
    """
    m = values.shape[0]
    index = np.empty(m, dtype=np.int64)
    dist = np.empty(m)
    for i in range(m):
        d = ((values[i] - values) ** 2).sum(axis=1)
        d[i] = np.inf
        j = int(d.argmin())
        index[i] = j
        dist[i] = d[j]
    return index, dist


def minmax_ref(values: np.ndarray) -> np.ndarray:
    """Per-column (x - min) / (max - min); zero-spread columns map to 0."""
    out = np.empty_like(values, dtype=np.float64)
    for j in range(values.shape[1]):
        col = values[:, j]
        lo, hi = col.min(), col.max()
        out[:, j] = 0.0 if hi == lo else (col - lo) / (hi - lo)
    return out


def brute_si(values: np.ndarray, labels: np.ndarray) -> float:
    """Leave-one-out 1-NN accuracy straight from the definition."""
    index, _ = brute_nearest(values)
    return float(np.mean(labels[index] == labels))


def wilder_rsi_ref(closes, period: int) -> np.ndarray:
    """RSI with Wilder smoothing, written as the textbook recurrence.

    Leading NaNs are skipped so the oracle can chain over warm-up prefixes.
    """
    closes = np.asarray(closes, dtype=np.float64)
    n = closes.size
    out = np.full(n, np.nan)
    finite = np.flatnonzero(np.isfinite(closes))
    if finite.size and finite[0] > 0:
        out[finite[0]:] = wilder_rsi_ref(closes[finite[0]:], period)
        return out
    if n <= period:
        return out
    deltas = np.diff(closes)
    gains = np.maximum(deltas, 0.0)
    losses = np.maximum(-deltas, 0.0)

    def to_rsi(g: float, l: float) -> float:
        if l == 0.0:
            return 50.0 if g == 0.0 else 100.0
        return 100.0 - 100.0 / (1.0 + g / l)

    avg_g = gains[:period].mean()
    avg_l = losses[:period].mean()
    out[period] = to_rsi(avg_g, avg_l)
    for t in range(period + 1, n):
        avg_g = (avg_g * (period - 1) + gains[t - 1]) / period
        avg_l = (avg_l * (period - 1) + losses[t - 1]) / period
        out[t] = to_rsi(avg_g, avg_l)
    return out


def ema_ref(values, period: int) -> np.ndarray:
    """EMA seeded with the simple mean of the first ``period`` defined values.

    Leading NaNs are skipped so the oracle can chain over warm-up prefixes.
    """
    x = np.asarray(values, dtype=np.float64)
    out = np.full(x.size, np.nan)
    finite = np.flatnonzero(~np.isnan(x))
    if finite.size == 0:
        return out
    first = int(finite[0])
    if x.size - first < period:
        return out
    alpha = 2.0 / (period + 1)
    prev = x[first:first + period].mean()
    out[first + period - 1] = prev
    for t in range(first + period, x.size):
        prev = alpha * x[t] + (1.0 - alpha) * prev
        out[t] = prev
    return out


def window_corr_ref(values, period: int) -> np.ndarray:
    """Rolling Pearson correlation against a straight line via np.corrcoef."""
    x = np.asarray(values, dtype=np.float64)
    out = np.full(x.size, np.nan)
    t = np.arange(period, dtype=np.float64)
    for end in range(period - 1, x.size):
        w = x[end - period + 1:end + 1]
        if w.std() == 0.0:
            out[end] = 0.0
        else:
            out[end] = np.corrcoef(w, t)[0, 1]
    return out


def pct_change_max_ref(values, window: int) -> np.ndarray:
    """max over k in 1..window of (v_t - v_{t-k}) / v_{t-k}, by loops."""
    x = np.asarray(values, dtype=np.float64)
    out = np.full(x.size, np.nan)
    for t in range(window, x.size):
        best = -np.inf
        for k in range(1, window + 1):
            prev = x[t - k]
            if prev == 0.0:
                best = np.nan
                break
            best = max(best, (x[t] - prev) / prev)
        out[t] = best
    return out


def bucket_ref(change: float, mean_neg: float, mean_pos: float) -> int:
    """Ten-class magnitude bucket by interval scan; edges toward zero."""
    if change < mean_neg:
        return 0
    if change > mean_pos:
        return 9
    if change > 0:
        w = mean_pos / 4.0
        for k in range(1, 5):
            if change <= k * w:
                return 4 + k
        return 8
    w = -mean_neg / 4.0
    for k in range(1, 5):
        if -change <= k * w:
            return 5 - k
    return 1


def knn_ref(train_values: np.ndarray, train_labels: np.ndarray,
            queries: np.ndarray, k: int, exclude_self: bool = False) -> np.ndarray:
    """k-NN majority with nearest-first tiebreak, by exhaustive scan."""
    out = np.empty(queries.shape[0], dtype=np.int64)
    for qi in range(queries.shape[0]):
        diff = train_values - queries[qi]
        dist = (diff * diff).sum(axis=1)
        if exclude_self:
            dist[qi] = np.inf
        order = np.argsort(dist, kind="stable")[:k]
        labels = train_labels[order]
        counts = np.bincount(labels)
        top = counts.max()
        for lab in labels:  # nearest-first scan settles count ties
            if counts[lab] == top:
                out[qi] = lab
                break
    return out


def random_labeled(rng: np.random.Generator, m: int, n: int,
                   n_classes: int, integer_grid: bool = False) -> FeatureMatrix:
    """A random labeled matrix guaranteed to contain at least 2 classes."""
    labels = rng.integers(0, n_classes, m)
    labels[0], labels[1] = 0, 1
    if integer_grid:
        values = rng.integers(0, 50, (m, n)).astype(np.float64)
    else:
        values = rng.standard_normal((m, n))
    return FeatureMatrix(values, labels, tuple(f"c{j}" for j in range(n)))
