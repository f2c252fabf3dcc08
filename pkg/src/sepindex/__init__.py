"""Separation Index toolkit.

Measures how separable a labeled feature matrix is (the fraction of rows
whose nearest neighbor shares their label, i.e. leave-one-out 1-NN accuracy),
selects informative observation sets greedily by that measure, and ships the
minute-bar feature pipeline plus voting k-NN baselines that make the whole
select-then-predict workflow runnable end to end.

Submodule imports are lazy so the CLI can cap BLAS threads before numpy loads.
"""

__version__ = "0.1.0"

_EXPORTS = {
    "FeatureMatrix": "matrix",
    "Scaler": "matrix",
    "normalize": "matrix",
    "DistanceMatrix": "distance",
    "NeighborAssignment": "distance",
    "distance_matrix": "distance",
    "nearest_neighbors": "distance",
    "nearest_neighbors_tiled": "distance",
    "SiResult": "si",
    "separation_index": "si",
    "separation_index_sampled": "si",
    "ObservationSet": "selection",
    "SelectionConfig": "selection",
    "EstimatorConfig": "selection",
    "SelectionTrace": "selection",
    "project": "selection",
    "seed_selection": "selection",
    "rank_observations": "selection",
    "CandleSeries": "candles",
    "ingest_csv": "candles",
    "repair_gaps": "candles",
    "IndicatorConfig": "pipeline",
    "build_labeled_features": "pipeline",
    "default_observation_sets": "pipeline",
    "label_frame": "pipeline",
    "LabeledFrame": "labeling",
    "MagnitudeStats": "labeling",
    "bucket_magnitude": "labeling",
    "build_lags": "labeling",
    "KnnModel": "models",
    "knn_fit": "models",
    "knn_predict": "models",
    "vote": "models",
    "evaluate": "models",
    "run_experiment": "models",
    "chronological_split": "models",
    "PipelineConfig": "config",
    "ModelConfig": "config",
    "SplitRatios": "config",
    "load_config": "config",
    "config_hash": "config",
    "SepIndexError": "errors",
    "InputError": "errors",
    "MemoryBudgetError": "errors",
    "StaleCacheError": "errors",
}

__all__ = ["__version__", *_EXPORTS]


def __getattr__(name: str):
    module_name = _EXPORTS.get(name)
    if module_name is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    import importlib

    module = importlib.import_module(f".{module_name}", __name__)
    value = getattr(module, name)
    globals()[name] = value
    return value


def __dir__():
    return sorted(__all__)
