"""k-NN baselines, the sign-agreement voting combinator, and evaluation.

Two k-NN classifiers share one frame: one predicts next-minute direction
(binary), the other the ten-class change magnitude.  The voting combinator
retains a direction call only when the magnitude class agrees in sign,
abstaining otherwise; evaluation reports plain, magnitude, and retained
accuracy plus coverage, confusion matrices, and the majority baseline.

``run_experiment`` wires the whole chain: feature build, chronological split,
greedy observation-set selection on the training rows only, fit, predict,
vote, evaluate, repeated over seeds.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .candles import CandleSeries
from .config import PipelineConfig, SplitRatios
from .errors import InputError
from .labeling import N_MAGNITUDE_CLASSES, LabeledFrame
from .matrix import FeatureMatrix, Scaler, normalize
from .pipeline import build_labeled_features, default_observation_sets
from .selection import SelectionConfig, SelectionTrace, project, rank_observations
from .si import separation_index

ABSTAIN = -1

TARGETS = ("direction", "magnitude")


@dataclass(frozen=True)
class KnnModel:
    """Normalized training rows plus everything needed to predict new ones."""

    values: np.ndarray
    labels: np.ndarray
    scaler: Scaler
    k: int
    target: str
    column_names: tuple[str, ...]

    @property
    def m(self) -> int:
        return self.values.shape[0]


def knn_fit(train: LabeledFrame, k: int, target: str,
            normalization: str = "minmax") -> KnnModel:
    """Memorize the training frame under a fitted scaler.

    ``target`` picks the label scheme: "direction" (k must be odd, so a
    two-class majority cannot tie) or "magnitude".
    """
    if target not in TARGETS:
        raise InputError(f"target must be one of {TARGETS}, got {target!r}")
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    if target == "direction" and k % 2 == 0:
        raise InputError(f"k must be odd for direction (tie avoidance), got {k}")
    if k > train.m:
        raise InputError(f"k={k} exceeds the {train.m} training rows")
    matrix = train.with_direction_labels() if target == "direction" \
        else train.with_magnitude_labels()
    scaled, scaler = normalize(matrix, normalization)
    return KnnModel(scaled.values, scaled.labels, scaler, k, target,
                    scaled.column_names)


def _majority_with_nearest_tiebreak(labels_sorted: np.ndarray) -> int:
    """Majority label of neighbors ordered nearest-first; on a count tie the
    label whose representative appears earliest wins."""
    counts = np.bincount(labels_sorted)
    top = counts.max()
    for label in labels_sorted:
        if counts[label] == top:
            return int(label)
    raise AssertionError("unreachable")


def knn_predict(model: KnnModel, rows: FeatureMatrix, *, exclude_self: bool = False,
                chunk_rows: int = 1024) -> np.ndarray:
    """Predicted label per query row.

    ``exclude_self=True`` treats query i as training row i (leave-one-out on
    the training frame) and requires one query per training row.
    """
    if set(rows.column_names) != set(model.column_names):
        missing = sorted(set(model.column_names) - set(rows.column_names))
        extra = sorted(set(rows.column_names) - set(model.column_names))
        raise InputError(f"column mismatch: missing {missing}, unexpected {extra}")
    if exclude_self and rows.m != model.m:
        raise InputError("exclude_self needs exactly one query per training row")
    if exclude_self and model.k > model.m - 1:
        raise InputError(f"k={model.k} leaves no neighbors once self is excluded")
    queries = model.scaler.transform(rows.select_columns(model.column_names)).values

    train = model.values
    sq_train = np.einsum("ij,ij->i", train, train)
    out = np.empty(rows.m, dtype=np.int64)

    for start in range(0, rows.m, chunk_rows):
        stop = min(start + chunk_rows, rows.m)
        q = queries[start:stop]
        sq_q = np.einsum("ij,ij->i", q, q)
        gram = train @ q.T
        block = sq_train[:, None] + sq_q[None, :]
        np.multiply(gram, 2.0, out=gram)
        np.subtract(block, gram, out=block)
        np.maximum(block, 0.0, out=block)
        if exclude_self:
            rows_idx = np.arange(start, stop)
            block[rows_idx, rows_idx - start] = np.inf

        if model.k == 1:
            nearest = block.argmin(axis=0)
            out[start:stop] = model.labels[nearest]
            continue
        for j in range(q.shape[0]):
            col = block[:, j]
            candidates = np.argpartition(col, model.k - 1)[:model.k]
            order = np.lexsort((candidates, col[candidates]))
            neighbor_labels = model.labels[candidates[order]]
            out[start + j] = _majority_with_nearest_tiebreak(neighbor_labels)
    return out


@dataclass(frozen=True)
class VotedPrediction:
    """Joint output of the two classifiers plus the match/abstain verdict."""

    direction: np.ndarray
    magnitude: np.ndarray
    matched: np.ndarray
    retained_direction: np.ndarray  # ABSTAIN where unmatched

    def __len__(self) -> int:
        return int(self.direction.size)


def vote(direction: np.ndarray, magnitude: np.ndarray) -> VotedPrediction:
    """Retain a direction call only when the magnitude class agrees in sign:
    down (0) needs class <= 4, up (1) needs class >= 5."""
    direction = np.asarray(direction, dtype=np.int64)
    magnitude = np.asarray(magnitude, dtype=np.int64)
    if direction.shape != magnitude.shape or direction.ndim != 1:
        raise InputError(
            f"prediction lengths differ: {direction.shape} vs {magnitude.shape}")
    if direction.size and not np.isin(direction, (0, 1)).all():
        raise InputError("direction predictions must be 0 or 1")
    if magnitude.size and (magnitude.min() < 0 or magnitude.max() >= N_MAGNITUDE_CLASSES):
        raise InputError("magnitude predictions must lie in 0..9")
    matched = ((direction == 0) & (magnitude <= 4)) | ((direction == 1) & (magnitude >= 5))
    retained = np.where(matched, direction, ABSTAIN).astype(np.int64)
    return VotedPrediction(direction, magnitude, matched, retained)


@dataclass(frozen=True)
class EvalReport:
    """Accuracy, coverage, and confusion metrics for one evaluated frame."""

    n_rows: int
    accuracy_direction: float
    accuracy_magnitude: float
    coverage: float
    matched_count: int
    accuracy_retained: float | None
    majority_baseline: float
    confusion_direction: tuple  # 2x2, [truth][predicted]
    confusion_magnitude: tuple  # 10x10, [truth][predicted]

    def to_dict(self) -> dict:
        return {
            "n_rows": self.n_rows,
            "accuracy_direction": self.accuracy_direction,
            "accuracy_magnitude": self.accuracy_magnitude,
            "coverage": self.coverage,
            "matched_count": self.matched_count,
            "accuracy_retained": self.accuracy_retained,
            "majority_baseline": self.majority_baseline,
            "confusion_direction": [list(r) for r in self.confusion_direction],
            "confusion_magnitude": [list(r) for r in self.confusion_magnitude],
        }

    def format_table(self) -> str:
        retained = ("undefined (no matches)" if self.accuracy_retained is None
                    else f"{self.accuracy_retained:.4f}")
        lines = [
            f"rows evaluated        {self.n_rows}",
            f"direction accuracy    {self.accuracy_direction:.4f}",
            f"magnitude accuracy    {self.accuracy_magnitude:.4f}",
            f"retained accuracy     {retained}",
            f"coverage              {self.coverage:.4f}  ({self.matched_count} rows)",
            f"majority baseline     {self.majority_baseline:.4f}",
        ]
        return "\n".join(lines)


def _confusion(truth: np.ndarray, predicted: np.ndarray, n: int) -> tuple:
    matrix = np.zeros((n, n), dtype=np.int64)
    np.add.at(matrix, (truth, predicted), 1)
    return tuple(tuple(int(x) for x in row) for row in matrix)


def evaluate(predictions: VotedPrediction, truth: LabeledFrame) -> EvalReport:
    """Score voted predictions against a labeled frame."""
    if len(predictions) != truth.m:
        raise InputError(
            f"{len(predictions)} predictions for {truth.m} truth rows")
    if truth.m == 0:
        raise InputError("cannot evaluate an empty frame")
    direction_ok = predictions.direction == truth.direction
    matched = predictions.matched
    matched_count = int(matched.sum())
    if matched_count:
        retained_accuracy = float(direction_ok[matched].mean())
    else:
        retained_accuracy = None
    counts = np.bincount(truth.direction, minlength=2)
    return EvalReport(
        n_rows=truth.m,
        accuracy_direction=float(direction_ok.mean()),
        accuracy_magnitude=float((predictions.magnitude == truth.magnitude_class).mean()),
        coverage=matched_count / truth.m,
        matched_count=matched_count,
        accuracy_retained=retained_accuracy,
        majority_baseline=float(counts.max() / truth.m),
        confusion_direction=_confusion(truth.direction, predictions.direction, 2),
        confusion_magnitude=_confusion(truth.magnitude_class, predictions.magnitude,
                                       N_MAGNITUDE_CLASSES),
    )


@dataclass(frozen=True)
class SplitIndices:
    """Contiguous chronological row ranges: train, then validation, then test."""

    train: slice
    validation: slice
    test: slice


def chronological_split(m: int, ratios: SplitRatios) -> SplitIndices:
    """Cut [0, m) into ordered train/validation/test ranges; every training
    row precedes every validation row, which precedes every test row."""
    if m < 3:
        raise InputError(f"need at least 3 rows to split, got {m}")
    n_train = int(m * ratios.train)
    n_val = int(m * ratios.validation)
    if n_train < 1 or m - n_train - n_val < 1:
        raise InputError(f"split ratios leave an empty part for m={m}")
    return SplitIndices(slice(0, n_train), slice(n_train, n_train + n_val),
                        slice(n_train + n_val, m))


@dataclass(frozen=True)
class RunResult:
    """One seed's worth of the experiment."""

    seed: int
    report: EvalReport
    trace: SelectionTrace | None
    selected_columns: tuple[str, ...]
    si_train: float

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "report": self.report.to_dict(),
            "trace": None if self.trace is None else self.trace.to_json_dict(),
            "selected_columns": list(self.selected_columns),
            "si_train": self.si_train,
        }


@dataclass(frozen=True)
class ExperimentReport:
    """All runs plus the mean/max summary rows."""

    runs: tuple[RunResult, ...]
    deterministic: bool
    mean_accuracy_direction: float
    max_accuracy_direction: float
    mean_accuracy_retained: float | None
    max_accuracy_retained: float | None
    mean_coverage: float
    rows_dropped_undefined: int

    def to_dict(self) -> dict:
        return {
            "deterministic": self.deterministic,
            "n_runs": len(self.runs),
            "mean_accuracy_direction": self.mean_accuracy_direction,
            "max_accuracy_direction": self.max_accuracy_direction,
            "mean_accuracy_retained": self.mean_accuracy_retained,
            "max_accuracy_retained": self.max_accuracy_retained,
            "mean_coverage": self.mean_coverage,
            "rows_dropped_undefined": self.rows_dropped_undefined,
            "runs": [r.to_dict() for r in self.runs],
        }

    def format_table(self) -> str:
        runs = len(self.runs)
        retained_mean = ("n/a" if self.mean_accuracy_retained is None
                         else f"{self.mean_accuracy_retained:.4f}")
        retained_max = ("n/a" if self.max_accuracy_retained is None
                        else f"{self.max_accuracy_retained:.4f}")
        note = " (deterministic: runs coincide)" if self.deterministic else ""
        lines = [
            f"runs                  {runs}{note}",
            f"direction avg         {self.mean_accuracy_direction:.4f}",
            f"direction max         {self.max_accuracy_direction:.4f}",
            f"retained avg          {retained_mean}",
            f"retained max          {retained_max}",
            f"coverage avg          {self.mean_coverage:.4f}",
            "",
            "last run:",
            self.runs[-1].report.format_table(),
        ]
        return "\n".join(lines)


def _run_once(train: LabeledFrame, test: LabeledFrame, config: PipelineConfig,
              selection: SelectionConfig, seed: int) -> RunResult:
    sets = list(config.sets) or default_observation_sets(
        train.features.column_names, config.lags)
    trace = rank_observations(train.features, sets, selection)
    by_name = {s.name: s for s in sets}
    chosen = [by_name[name] for name in trace.accepted_sets]
    columns = tuple(project(train.features, chosen).column_names)

    train_sel = train.with_columns(columns)
    test_sel = test.with_columns(columns)
    si_train = separation_index(
        train_sel.features, normalization=config.normalization).value

    direction_model = knn_fit(train_sel, config.model.k_direction, "direction",
                              config.normalization)
    magnitude_model = knn_fit(train_sel, config.model.k_magnitude, "magnitude",
                              config.normalization)
    voted = vote(
        knn_predict(direction_model, test_sel.features),
        knn_predict(magnitude_model, test_sel.features),
    )
    return RunResult(seed, evaluate(voted, test_sel), trace, columns, si_train)


def run_experiment(config: PipelineConfig,
                   series: CandleSeries | None = None) -> ExperimentReport:
    """Features -> selection -> models -> vote -> evaluate, repeated per seed.

    Selection and magnitude-bucket geometry see training rows only; the
    validation slice is reserved by the split but unused by these baselines.
    Only the sampled Separation Index estimator is stochastic, so with the
    exact estimator a single run stands for all seeds and the report says so.
    """
    if series is None:
        if config.input_csv is None:
            raise InputError("config has no input_csv and no series was provided")
        from .candles import ingest_csv, repair_gaps
        series, _ = repair_gaps(ingest_csv(config.input_csv), config.max_gap_minutes)

    frame, build_report = build_labeled_features(
        series, config.indicators, config.lags,
        train_fraction=config.split.train)
    split = chronological_split(frame.m, config.split)
    train, test = frame.take_rows(split.train), frame.take_rows(split.test)

    deterministic = config.selection.estimator.kind == "exact"
    seeds = [config.seed] if deterministic else [
        config.seed + i for i in range(config.model.seeds)]

    runs = []
    for seed in seeds:
        selection = replace(config.selection,
                            estimator=replace(config.selection.estimator, seed=seed))
        runs.append(_run_once(train, test, config, selection, seed))

    retained = [r.report.accuracy_retained for r in runs
                if r.report.accuracy_retained is not None]
    return ExperimentReport(
        runs=tuple(runs),
        deterministic=deterministic,
        mean_accuracy_direction=float(
            np.mean([r.report.accuracy_direction for r in runs])),
        max_accuracy_direction=float(
            np.max([r.report.accuracy_direction for r in runs])),
        mean_accuracy_retained=float(np.mean(retained)) if retained else None,
        max_accuracy_retained=float(np.max(retained)) if retained else None,
        mean_coverage=float(np.mean([r.report.coverage for r in runs])),
        rows_dropped_undefined=build_report.rows_dropped_undefined,
    )
