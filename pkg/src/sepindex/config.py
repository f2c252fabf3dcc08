"""One JSON config to drive every pipeline stage, hashed for reproducibility.

The hash is a SHA-256 over the canonicalized (sorted-key, compact) JSON form
of the raw document; every artifact embeds it so stale caches are detectable.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InputError
from .pipeline import IndicatorConfig
from .selection import EstimatorConfig, ObservationSet, SelectionConfig


@dataclass(frozen=True)
class SplitRatios:
    """Chronological train/validation/test fractions."""

    train: float = 0.7
    validation: float = 0.1
    test: float = 0.2

    def __post_init__(self):
        parts = (self.train, self.validation, self.test)
        if any(p < 0 for p in parts) or self.train <= 0 or self.test <= 0:
            raise InputError(f"split ratios must be positive (validation may be 0), got {parts}")
        if abs(sum(parts) - 1.0) > 1e-9:
            raise InputError(f"split ratios must sum to 1, got {sum(parts)}")


@dataclass(frozen=True)
class ModelConfig:
    """k-NN settings for the two targets plus the repeat protocol."""

    k_direction: int = 1
    k_magnitude: int = 1
    seeds: int = 15

    def __post_init__(self):
        if self.k_direction < 1 or self.k_direction % 2 == 0:
            raise InputError(
                f"k_direction must be a positive odd integer, got {self.k_direction}")
        if self.k_magnitude < 1:
            raise InputError(f"k_magnitude must be >= 1, got {self.k_magnitude}")
        if self.seeds < 1:
            raise InputError(f"seeds must be >= 1, got {self.seeds}")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything the CLI needs, parsed from one JSON document."""

    indicators: IndicatorConfig
    input_csv: str | None = None
    out_dir: str = "out"
    seed: int = 0
    lags: tuple[int, ...] = ()
    max_gap_minutes: int = 120
    sets: tuple[ObservationSet, ...] = ()
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    split: SplitRatios = field(default_factory=SplitRatios)
    normalization: str = "minmax"
    memory_budget: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "lags", tuple(int(k) for k in self.lags))
        object.__setattr__(self, "sets", tuple(self.sets))


def canonical_json(document) -> str:
    return json.dumps(document, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False)


def config_hash(document) -> str:
    """SHA-256 of the canonical JSON form of the raw config document."""
    return hashlib.sha256(canonical_json(document).encode("utf-8")).hexdigest()


def _take(raw: dict, key: str, default=None):
    value = raw.pop(key, default)
    return default if value is None else value


def _parse_estimator(raw: dict) -> EstimatorConfig:
    known = {"kind", "sample_size", "seed", "normalization", "memory_budget"}
    unknown = set(raw) - known
    if unknown:
        raise InputError(f"unknown estimator fields: {sorted(unknown)}")
    return EstimatorConfig(**raw)


def _parse_selection(raw: dict) -> SelectionConfig:
    estimator = raw.pop("estimator", None)
    known = {"mode", "margin", "passes", "allow_overlap"}
    unknown = set(raw) - known
    if unknown:
        raise InputError(f"unknown selection fields: {sorted(unknown)}")
    kwargs = dict(raw)
    if estimator is not None:
        kwargs["estimator"] = _parse_estimator(dict(estimator))
    return SelectionConfig(**kwargs)


def _parse_sets(raw) -> tuple[ObservationSet, ...]:
    sets = []
    for entry in raw:
        if not isinstance(entry, dict) or set(entry) != {"name", "columns"}:
            raise InputError(
                f"each observation set needs exactly name and columns, got {entry!r}")
        sets.append(ObservationSet(entry["name"], tuple(entry["columns"])))
    return tuple(sets)


def parse_config(document: dict) -> PipelineConfig:
    """Build a validated PipelineConfig from a raw JSON document."""
    if not isinstance(document, dict):
        raise InputError("config must be a JSON object")
    raw = dict(document)

    indicators_raw = raw.pop("indicators", None)
    if not isinstance(indicators_raw, dict):
        raise InputError("config needs an 'indicators' object")
    if "safe_dump_threshold" not in indicators_raw:
        raise InputError("indicators.safe_dump_threshold is required and has no default")
    for key in ("ema_periods", "cti_periods", "willr_periods", "crsi_params",
                "enabled"):
        if key in indicators_raw and indicators_raw[key] is not None:
            indicators_raw[key] = tuple(indicators_raw[key])
    try:
        indicators = IndicatorConfig(**indicators_raw)
    except TypeError as exc:
        raise InputError(f"bad indicators config: {exc}") from exc

    # The flat form {"sets": ..., "mode": ..., "margin": ..., "estimator": ...}
    # is accepted too; top-level selection keys fold into the selection object.
    selection_raw = dict(_take(raw, "selection", {}))
    for key in ("mode", "margin", "passes", "allow_overlap", "estimator"):
        if key in raw:
            if key in selection_raw:
                raise InputError(
                    f"selection field {key!r} given both at top level and under 'selection'")
            selection_raw[key] = raw.pop(key)

    try:
        selection = _parse_selection(selection_raw)
        model = ModelConfig(**_take(raw, "model", {}))
        split = SplitRatios(**_take(raw, "split", {}))
        sets = _parse_sets(_take(raw, "sets", []))
    except TypeError as exc:
        raise InputError(f"bad config: {exc}") from exc

    known = {"input_csv", "out_dir", "seed", "lags", "max_gap_minutes",
             "normalization", "memory_budget"}
    extra = set(raw) - known
    if extra:
        raise InputError(f"unknown config fields: {sorted(extra)}")

    return PipelineConfig(
        indicators=indicators,
        input_csv=raw.get("input_csv"),
        out_dir=raw.get("out_dir", "out"),
        seed=int(raw.get("seed", 0)),
        lags=tuple(raw.get("lags", ())),
        max_gap_minutes=int(raw.get("max_gap_minutes", 120)),
        sets=sets,
        selection=selection,
        model=model,
        split=split,
        normalization=raw.get("normalization", "minmax"),
        memory_budget=raw.get("memory_budget"),
    )


def load_config(path) -> tuple[PipelineConfig, str]:
    """Read, validate, and hash a config file; returns (config, hash)."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"config file not found: {path}")
    try:
        document = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"config {path} is not valid JSON: {exc}") from exc
    config = parse_config(document)
    if config.input_csv is not None and not Path(config.input_csv).exists():
        raise InputError(f"input_csv does not exist: {config.input_csv}")
    return config, config_hash(document)
