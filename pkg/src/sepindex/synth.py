"""Synthetic data generators for calibration, demos, and end-to-end checks.

Two families: candle series with a known amount of predictive signal in the
next-minute direction (persistent trend vs pure noise), and labeled Gaussian
feature matrices with tunable class separation.  Everything is seeded and
deterministic.
"""

from __future__ import annotations

import numpy as np

from .candles import BAR_MS, CandleSeries
from .errors import InputError
from .matrix import FeatureMatrix
from .selection import ObservationSet

START_TS = 1_700_000_040_000  # an arbitrary whole minute


def _assemble_candles(closes: np.ndarray, rng: np.random.Generator,
                      start_price: float) -> CandleSeries:
    m = closes.size
    opens = np.concatenate(([start_price], closes[:-1]))
    body_top = np.maximum(opens, closes)
    body_bot = np.minimum(opens, closes)
    high = body_top + rng.uniform(0.0, 0.3, m)
    low = body_bot - rng.uniform(0.0, 0.3, m)
    volume = rng.uniform(1.0, 100.0, m)
    timestamps = START_TS + BAR_MS * np.arange(m, dtype=np.int64)
    return CandleSeries(timestamps, opens, high, low, closes, volume)


def persistent_trend_candles(m: int, persistence: float = 0.9, seed: int = 0,
                             start_price: float = 10_000.0,
                             step_range: tuple[float, float] = (0.5, 1.5)
                             ) -> CandleSeries:
    """Minute bars whose close changes keep their sign with the given
    probability, so the previous change predicts the next direction with
    exactly that accuracy."""
    if m < 3:
        raise InputError(f"need at least 3 bars, got {m}")
    if not 0.0 <= persistence <= 1.0:
        raise InputError(f"persistence must be in [0, 1], got {persistence}")
    rng = np.random.default_rng(seed)
    hold = rng.random(m - 1) < persistence
    factors = np.where(hold, 1.0, -1.0)
    factors[0] = 1.0
    signs = np.cumprod(factors)
    steps = signs * rng.uniform(*step_range, m - 1)
    closes = start_price + np.concatenate(([0.0], np.cumsum(steps)))
    return _assemble_candles(closes, rng, start_price)


def white_noise_candles(m: int, seed: int = 0, start_price: float = 10_000.0,
                        sigma: float = 1.0) -> CandleSeries:
    """Minute bars driven by i.i.d. Gaussian close changes: no feature built
    from the past can predict the next direction."""
    if m < 3:
        raise InputError(f"need at least 3 bars, got {m}")
    rng = np.random.default_rng(seed)
    steps = rng.normal(0.0, sigma, m - 1)
    closes = start_price + np.concatenate(([0.0], np.cumsum(steps)))
    return _assemble_candles(closes, rng, start_price)


def gaussian_blobs(m: int, n: int, n_classes: int = 2, separation: float = 1.0,
                   seed: int = 0) -> FeatureMatrix:
    """Labeled unit-variance Gaussian clusters with centers ``separation``
    apart along ring-assigned axes."""
    if m < n_classes or n < 1 or n_classes < 2:
        raise InputError("need m >= n_classes, n >= 1, n_classes >= 2")
    rng = np.random.default_rng(seed)
    labels = np.sort(rng.integers(0, n_classes, m))
    centers = np.zeros((n_classes, n))
    for c in range(n_classes):
        centers[c, c % n] = separation * (1 + c // n)
    values = rng.standard_normal((m, n)) + centers[labels]
    order = rng.permutation(m)
    return FeatureMatrix(values[order], labels[order],
                         tuple(f"f{j}" for j in range(n)))


def structured_observation_fixture(m: int, seed: int,
                                   base_shift: float = 0.8,
                                   refine_shift: float = 0.55,
                                   faint_shift: float = 0.5
                                   ) -> tuple[FeatureMatrix, list[ObservationSet]]:
    """A two-class matrix with three informative observation sets of
    decreasing strength plus one pure-noise set.

    Each informative set holds two Gaussian columns shifted by its strength
    times the class sign, so unions of informative sets separate better than
    any subset.  The noise set holds four label-independent uniform columns;
    uniform noise keeps its full spread under minmax normalization, so adding
    the set reliably dilutes distances instead of hiding in the tails.
    """
    if m < 8:
        raise InputError(f"need at least 8 rows, got {m}")
    rng = np.random.default_rng(seed)
    labels = (np.arange(m) % 2).astype(np.int64)
    sign = (2 * labels - 1).astype(np.float64)[:, None]

    shifts = {"base": base_shift, "refine": refine_shift, "faint": faint_shift}
    columns = []
    names = []
    sets = []
    for group, shift in shifts.items():
        block = rng.standard_normal((m, 2)) + shift * sign
        columns.append(block)
        group_names = (f"{group}_0", f"{group}_1")
        names += group_names
        sets.append(ObservationSet(group, group_names))
    noise_names = tuple(f"noise_{j}" for j in range(4))
    columns.append(rng.uniform(-3.0, 3.0, (m, len(noise_names))))
    names += noise_names
    sets.append(ObservationSet("noise", noise_names))

    values = np.hstack(columns)
    order = rng.permutation(m)
    return FeatureMatrix(values[order], labels[order], tuple(names)), sets
