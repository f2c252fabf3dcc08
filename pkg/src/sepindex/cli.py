"""Command-line pipeline: ingest, features, si, select, evaluate, report.

One JSON config drives everything; its SHA-256 hash is embedded in every
artifact and guards every binary cache, so nothing stale is ever reused
silently.  Exit codes: 0 success, 2 input error, 3 memory-budget refusal,
4 stale-cache refusal.

``--threads`` caps BLAS threading and must act before numpy loads, so this
module defers all heavy imports into the command bodies.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_MEMORY = 3
EXIT_STALE = 4


def _write_json(path: Path, document: dict) -> None:
    path.write_text(json.dumps(document, sort_keys=True, indent=2) + "\n")


def _load_config(args):
    from .config import load_config

    if not args.config:
        from .errors import InputError
        raise InputError("--config is required")
    config, digest = load_config(args.config)
    if args.out:
        config = _replaced(config, out_dir=args.out)
    if args.seed is not None:
        config = _replaced(config, seed=args.seed)
    return config, digest


def _replaced(config, **kwargs):
    from dataclasses import replace
    return replace(config, **kwargs)


def _out_dir(config) -> Path:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_series(config, digest, out: Path):
    """Repaired candles: from a fresh cache when present, else from the CSV."""
    from . import cache
    from .candles import CandleSeries, ingest_csv, repair_gaps
    from .errors import InputError

    cache_path = out / "candles.bin"
    if cache_path.exists():
        arrays, _ = cache.read_cache(cache_path, cache.KIND_CANDLES, digest)
        return CandleSeries(arrays["timestamp"], arrays["open"], arrays["high"],
                            arrays["low"], arrays["close"], arrays["volume"]), None
    if config.input_csv is None:
        raise InputError("config has no input_csv and no candle cache exists")
    series = ingest_csv(config.input_csv)
    return repair_gaps(series, config.max_gap_minutes)


def cmd_ingest(args) -> int:
    from . import cache

    config, digest = _load_config(args)
    out = _out_dir(config)
    from .candles import ingest_csv, repair_gaps
    from .errors import InputError

    if config.input_csv is None:
        raise InputError("config.input_csv is required for ingest")
    series = ingest_csv(config.input_csv)
    repaired, report = repair_gaps(series, config.max_gap_minutes)

    cache.write_cache(
        out / "candles.bin", cache.KIND_CANDLES,
        {name: getattr(repaired, name)
         for name in ("timestamp", "open", "high", "low", "close", "volume")},
        {"config_hash": digest, "rows": len(repaired),
         "repair": report.to_dict()},
    )
    _write_json(out / "repair_report.json",
                {"config_hash": digest, "rows": len(repaired),
                 "repair": report.to_dict()})
    print(f"ingested {len(series)} bars -> {len(repaired)} after repair "
          f"({report.total_filled} filled); wrote {out / 'candles.bin'}")
    return EXIT_OK


def _build_frame(config, digest, out: Path):
    from .pipeline import build_labeled_features

    series, _ = _load_series(config, digest, out)
    return build_labeled_features(series, config.indicators, config.lags,
                                  train_fraction=config.split.train)


def _frame_to_cache(frame) -> dict:
    return {
        "values": frame.features.values,
        "direction": frame.features.labels,
        "magnitude": frame.magnitude_class,
        "change": frame.close_change,
    }


def _frame_from_cache(arrays, meta):
    from .labeling import LabeledFrame, MagnitudeStats
    from .matrix import FeatureMatrix

    stats = MagnitudeStats(meta["stats"]["mean_positive"], meta["stats"]["mean_negative"])
    features = FeatureMatrix(arrays["values"], arrays["direction"],
                             tuple(meta["columns"]))
    return LabeledFrame(features, arrays["magnitude"], arrays["change"], stats)


def cmd_features(args) -> int:
    from . import cache
    from .matrix import to_dataframe

    config, digest = _load_config(args)
    out = _out_dir(config)
    frame, report = _build_frame(config, digest, out)

    table = to_dataframe(frame.features)
    table["magnitude_class"] = frame.magnitude_class
    table.to_csv(out / "features.csv", index=False)

    meta = {"config_hash": digest, "columns": list(frame.features.column_names),
            "stats": frame.stats.to_dict(), "report": report.to_dict(),
            "lags": list(config.lags), "normalization": config.normalization}
    cache.write_cache(out / "features.bin", cache.KIND_FEATURES,
                      _frame_to_cache(frame), meta)
    _write_json(out / "features_meta.json", meta)
    print(f"built {frame.m} rows x {frame.features.n} columns "
          f"({report.rows_dropped_undefined} undefined rows dropped); "
          f"wrote {out / 'features.csv'}")
    return EXIT_OK


def _load_frame(config, digest, out: Path, input_override: str | None):
    """The labeled frame a subcommand should work on.

    Preference order: explicit --input (CSV or cache), fresh features cache in
    the out dir, rebuild from candles/CSV.  A features cache with a different
    config hash is a hard error, never silently rebuilt.
    """
    from . import cache
    from .errors import InputError

    if input_override:
        path = Path(input_override)
        if not path.exists():
            raise InputError(f"--input does not exist: {path}")
        if path.suffix == ".bin":
            arrays, meta = cache.read_cache(path, cache.KIND_FEATURES)
            return _frame_from_cache(arrays, meta)
        return _csv_frame(path)
    cache_path = out / "features.bin"
    if cache_path.exists():
        arrays, meta = cache.read_cache(cache_path, cache.KIND_FEATURES, digest)
        return _frame_from_cache(arrays, meta)
    frame, _ = _build_frame(config, digest, out)
    return frame


def _csv_frame(path: Path):
    import numpy as np
    import pandas as pd

    from .errors import InputError
    from .labeling import LabeledFrame, MagnitudeStats
    from .matrix import from_dataframe

    try:
        table = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if "magnitude_class" in table.columns:
        magnitude = table.pop("magnitude_class").to_numpy().astype(np.int64)
    else:
        magnitude = None
    features = from_dataframe(table)
    if magnitude is None:
        magnitude = np.zeros(features.m, dtype=np.int64)
    # bucket geometry is not stored in the CSV; a unit placeholder keeps the
    # frame usable for SI and prediction, which never consult it
    return LabeledFrame(features, magnitude, np.zeros(features.m),
                        MagnitudeStats(1.0, -1.0))


def cmd_si(args) -> int:
    from .si import separation_index, separation_index_sampled

    config, digest = _load_config(args)
    out = _out_dir(config)
    frame = _load_frame(config, digest, out, args.input)
    matrix = (frame.with_magnitude_labels() if args.target == "magnitude"
              else frame.with_direction_labels())

    kwargs = {}
    if config.memory_budget is not None:
        kwargs["memory_budget"] = config.memory_budget
    if args.estimator == "sampled":
        result = separation_index_sampled(
            matrix, args.sample, args.seed if args.seed is not None else config.seed,
            normalization=config.normalization)
    else:
        # exact means the full matrix; over budget that is a refusal (exit 3),
        # not a silent fallback -- pass --tile-rows to bound memory instead
        tile = args.tile_rows if args.tile_rows else None
        result = separation_index(matrix, normalization=config.normalization,
                                  tile_rows=tile, **kwargs)

    document = {"config_hash": digest, "target": args.target, **result.to_dict()}
    _write_json(out / "si_result.json", document)
    print(json.dumps(document, sort_keys=True))
    return EXIT_OK


def cmd_select(args) -> int:
    from .errors import InputError
    from .pipeline import default_observation_sets
    from .selection import rank_observations

    config, digest = _load_config(args)
    out = _out_dir(config)
    frame = _load_frame(config, digest, out, args.input)

    sets = list(config.sets) or default_observation_sets(
        frame.features.column_names, config.lags)
    if not sets:
        raise InputError("no observation sets declared and none derivable")
    trace = rank_observations(frame.features, sets, config.selection)

    _write_json(out / "selection_trace.json",
                {"config_hash": digest, **trace.to_json_dict()})
    (out / "si_val.csv").write_text(trace.si_val_csv())
    accepted = ", ".join(trace.accepted_sets)
    print(f"seed {trace.seed_set}; accepted [{accepted}]; "
          f"final SI {trace.final_si:.4f}; wrote {out / 'selection_trace.json'}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from . import cache
    from .models import run_experiment

    config, digest = _load_config(args)
    out = _out_dir(config)
    # an existing features cache must match this config; refuse if stale
    cache_path = out / "features.bin"
    if cache_path.exists():
        cache.read_cache(cache_path, cache.KIND_FEATURES, digest)

    series, _ = _load_series(config, digest, out)
    report = run_experiment(config, series)
    _write_json(out / "eval_report.json", {"config_hash": digest, **report.to_dict()})
    print(report.format_table())
    print(f"\nwrote {out / 'eval_report.json'}")
    return EXIT_OK


def cmd_report(args) -> int:
    config, digest = _load_config(args)
    out = Path(config.out_dir)
    printed = False

    si_path = out / "si_result.json"
    if si_path.exists():
        document = json.loads(si_path.read_text())
        print(f"Separation Index ({document.get('estimator')}, "
              f"target {document.get('target')}): {document.get('value'):.4f} "
              f"on {document.get('m')} rows "
              f"[config {str(document.get('config_hash'))[:12]}]")
        printed = True

    trace_path = out / "selection_trace.json"
    if trace_path.exists():
        document = json.loads(trace_path.read_text())
        print(f"\nSelection: seed {document['seed_set']}, "
              f"final SI {document['final_si']:.4f}")
        width = max((len(s["candidate"]) for s in document["steps"]), default=9)
        for step in document["steps"]:
            verdict = "accept" if step["accepted"] else "reject"
            print(f"  {step['candidate']:<{width}}  "
                  f"{step['si_before']:.4f} -> {step['si_candidate']:.4f}  {verdict}")
        staircase = " -> ".join(f"{v:.4f}" for v in document["si_val"])
        print(f"  si_val: {staircase}")
        printed = True

    eval_path = out / "eval_report.json"
    if eval_path.exists():
        document = json.loads(eval_path.read_text())
        note = " (deterministic)" if document.get("deterministic") else ""
        retained = document.get("mean_accuracy_retained")
        retained_text = "n/a" if retained is None else f"{retained:.4f}"
        print(f"\nEvaluation over {document['n_runs']} run(s){note}: "
              f"direction avg {document['mean_accuracy_direction']:.4f}, "
              f"max {document['max_accuracy_direction']:.4f}; "
              f"retained avg {retained_text}; "
              f"coverage avg {document['mean_coverage']:.4f}")
        printed = True

    if not printed:
        print(f"no artifacts found under {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sepindex",
        description="Separation Index toolkit: feature separability, greedy "
                    "observation-set selection, and voting k-NN baselines "
                    "over minute-bar data.",
    )
    parser.add_argument("--config", help="path to the JSON pipeline config")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, help="global seed (overrides config)")
    parser.add_argument("--threads", type=int,
                        help="cap BLAS/OpenMP threads for this invocation")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", help="parse, validate, and gap-repair the input CSV")
    sub.add_parser("features", help="build the labeled feature table")

    p_si = sub.add_parser("si", help="compute the Separation Index")
    p_si.add_argument("--input", help="feature CSV or cache to score "
                                      "(default: artifacts in the out dir)")
    p_si.add_argument("--estimator", choices=("exact", "sampled"), default="exact")
    p_si.add_argument("--sample", type=int, default=2000,
                      help="rows to score with --estimator sampled")
    p_si.add_argument("--tile-rows", type=int, default=0,
                      help="force the tiled kernel with this tile height")
    p_si.add_argument("--target", choices=("direction", "magnitude"),
                      default="direction")

    p_select = sub.add_parser("select", help="greedy observation-set selection")
    p_select.add_argument("--input", help="feature CSV or cache to select over")

    sub.add_parser("evaluate", help="full experiment: select, fit, vote, score")
    sub.add_parser("report", help="pretty-print artifacts from the out dir")
    return parser


COMMANDS = {
    "ingest": cmd_ingest,
    "features": cmd_features,
    "si": cmd_si,
    "select": cmd_select,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)

    from .errors import InputError, MemoryBudgetError, StaleCacheError

    try:
        return COMMANDS[args.command](args)
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except MemoryBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MEMORY
    except StaleCacheError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STALE


if __name__ == "__main__":
    sys.exit(main())
