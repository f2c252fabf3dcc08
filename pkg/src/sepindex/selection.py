"""Greedy forward selection of observation sets by Separation Index gain.

An observation set is a named group of feature columns.  Selection seeds with
the single set whose projection scores the highest index, then repeatedly
offers each remaining set: a candidate is kept only when the index of the
union improves on the current value by more than a margin.  Every evaluation
is recorded, so the resulting trace replays the whole search.

Each candidate projection is re-normalized before scoring; dropping columns
changes per-column spreads, so scales must be refit per projection.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

from .errors import ConstantColumnWarning, InputError
from .matrix import FeatureMatrix
from .si import SiResult, separation_index, separation_index_sampled


@dataclass(frozen=True)
class ObservationSet:
    """A named, non-empty group of feature columns."""

    name: str
    columns: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        if not self.name:
            raise InputError("observation set needs a name")
        if not self.columns:
            raise InputError(f"observation set {self.name!r} has no columns")
        if len(set(self.columns)) != len(self.columns):
            raise InputError(f"observation set {self.name!r} repeats a column")


@dataclass(frozen=True)
class EstimatorConfig:
    """Which Separation Index estimator selection uses for every evaluation."""

    kind: str = "exact"  # "exact" | "sampled"
    sample_size: int | None = None
    seed: int = 0
    normalization: str = "minmax"
    memory_budget: int | None = None

    def __post_init__(self):
        if self.kind not in ("exact", "sampled"):
            raise InputError(f"estimator kind must be exact or sampled, got {self.kind!r}")
        if self.kind == "sampled" and not self.sample_size:
            raise InputError("sampled estimator needs sample_size")


@dataclass(frozen=True)
class SelectionConfig:
    """Search settings for :func:`rank_observations`.

    ``margin`` is the required improvement: an absolute Separation Index gain
    with the exact estimator, a multiple of the candidate run's standard error
    with the sampled one (default 0.0 and 2.0 respectively).  Sets must not
    share columns unless ``allow_overlap`` is on.
    """

    mode: str = "ordered"  # "ordered" | "best_first"
    margin: float | None = None
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    passes: int = 1
    allow_overlap: bool = False

    def __post_init__(self):
        if self.mode not in ("ordered", "best_first"):
            raise InputError(f"mode must be ordered or best_first, got {self.mode!r}")
        if self.margin is not None and self.margin < 0:
            raise InputError("margin must be non-negative")
        if self.passes < 1:
            raise InputError("passes must be at least 1")

    def resolved_margin(self) -> float:
        if self.margin is not None:
            return self.margin
        return 0.0 if self.estimator.kind == "exact" else 2.0


@dataclass(frozen=True)
class SelectionStep:
    """One candidate evaluation during the search."""

    candidate: str
    si_before: float
    si_candidate: float
    accepted: bool


@dataclass(frozen=True)
class SelectionTrace:
    """Full record of a selection run."""

    seed_set: str
    steps: tuple[SelectionStep, ...]
    si_val: tuple[float, ...]  # index after the seed and after each acceptance
    final_si: float
    accepted_sets: tuple[str, ...]  # seed first, then acceptances in order

    def to_json_dict(self) -> dict:
        return {
            "seed_set": self.seed_set,
            "steps": [
                {
                    "candidate": s.candidate,
                    "si_before": s.si_before,
                    "si_candidate": s.si_candidate,
                    "accepted": s.accepted,
                }
                for s in self.steps
            ],
            "si_val": list(self.si_val),
            "final_si": self.final_si,
            "accepted_sets": list(self.accepted_sets),
        }

    def si_val_csv(self) -> str:
        lines = ["step,si"]
        lines += [f"{i},{v!r}" for i, v in enumerate(self.si_val)]
        return "\n".join(lines) + "\n"


def project(matrix: FeatureMatrix, sets) -> FeatureMatrix:
    """Project onto the union of the given sets' columns, in first-seen order."""
    sets = list(sets)
    if not sets:
        raise InputError("cannot project onto an empty collection of sets")
    seen: dict[str, None] = {}
    for s in sets:
        for c in s.columns:
            seen.setdefault(c)
    return matrix.select_columns(seen.keys())


def _validate_sets(matrix: FeatureMatrix, sets: list[ObservationSet],
                   allow_overlap: bool = False) -> None:
    if not sets:
        raise InputError("need at least one observation set")
    names = [s.name for s in sets]
    if len(set(names)) != len(names):
        raise InputError(f"duplicate observation set names: {sorted(names)}")
    known = set(matrix.column_names)
    claimed: dict[str, str] = {}
    for s in sets:
        missing = [c for c in s.columns if c not in known]
        if missing:
            raise InputError(f"set {s.name!r} references unknown columns: {missing}")
        for c in s.columns:
            if not allow_overlap and c in claimed:
                raise InputError(
                    f"column {c!r} appears in sets {claimed[c]!r} and {s.name!r}; "
                    f"sets must be disjoint unless allow_overlap is set")
            claimed.setdefault(c, s.name)


def _score(matrix: FeatureMatrix, sets, config: SelectionConfig) -> SiResult:
    sub = project(matrix, sets)
    est = config.estimator
    with warnings.catch_warnings():
        # constant-column projections are expected while probing candidates
        warnings.simplefilter("ignore", ConstantColumnWarning)
        if est.kind == "exact":
            kwargs = {}
            if est.memory_budget is not None:
                kwargs["memory_budget"] = est.memory_budget
            return separation_index(sub, normalization=est.normalization, **kwargs)
        return separation_index_sampled(
            sub, est.sample_size, est.seed, normalization=est.normalization)


def _threshold(config: SelectionConfig, candidate: SiResult) -> float:
    margin = config.resolved_margin()
    if config.estimator.kind == "sampled":
        return margin * candidate.standard_error
    return margin


def seed_selection(matrix: FeatureMatrix, sets,
                   config: SelectionConfig | None = None) -> tuple[ObservationSet, SiResult]:
    """The single set with the highest index; earlier declaration wins ties."""
    sets = list(sets)
    config = config or SelectionConfig()
    _validate_sets(matrix, sets, config.allow_overlap)
    best: tuple[ObservationSet, SiResult] | None = None
    for s in sets:
        result = _score(matrix, [s], config)
        if best is None or result.value > best[1].value:
            best = (s, result)
    return best


def rank_observations(matrix: FeatureMatrix, sets,
                      config: SelectionConfig | None = None) -> SelectionTrace:
    """Greedy forward search over observation sets.

    ordered mode offers the non-seed sets in declaration order, ``passes``
    times at most, stopping early after a pass with no acceptance.  best_first
    mode scores every remaining candidate each round and keeps the best one
    while it clears the margin.  si_val is strictly increasing by construction.
    """
    sets = list(sets)
    config = config or SelectionConfig()
    _validate_sets(matrix, sets, config.allow_overlap)

    seed, current = seed_selection(matrix, sets, config)
    accepted = [seed]
    si_val = [current.value]
    steps: list[SelectionStep] = []
    remaining = [s for s in sets if s.name != seed.name]

    if config.mode == "ordered":
        for _ in range(config.passes):
            taken_this_pass = False
            for candidate in list(remaining):
                result = _score(matrix, accepted + [candidate], config)
                ok = result.value > current.value + _threshold(config, result)
                steps.append(SelectionStep(candidate.name, current.value, result.value, ok))
                if ok:
                    accepted.append(candidate)
                    remaining.remove(candidate)
                    current = result
                    si_val.append(result.value)
                    taken_this_pass = True
            if not taken_this_pass:
                break
    else:  # best_first: re-rank every remaining candidate each round
        while remaining:
            scored = [(c, _score(matrix, accepted + [c], config)) for c in remaining]
            winner = max(range(len(scored)), key=lambda i: scored[i][1].value)
            win_set, win_result = scored[winner]
            ok = win_result.value > current.value + _threshold(config, win_result)
            for i, (c, r) in enumerate(scored):
                steps.append(SelectionStep(
                    c.name, current.value, r.value, ok and i == winner))
            if not ok:
                break
            accepted.append(win_set)
            remaining.remove(win_set)
            current = win_result
            si_val.append(win_result.value)

    return SelectionTrace(
        seed_set=seed.name,
        steps=tuple(steps),
        si_val=tuple(si_val),
        final_si=si_val[-1],
        accepted_sets=tuple(s.name for s in accepted),
    )
