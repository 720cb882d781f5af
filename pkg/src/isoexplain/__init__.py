"""Isolation forests with per-example attribute attributions.

Train a forest, score examples, explain individual predictions with the
split-imbalance attribution or the depth-only baseline, and reproduce the
ground-truth-simulation benchmark, the heatmap study, and the timing study
from the command line or as a library.
"""

__version__ = "0.1.0"

from .bench import TimingRecord, bench_explain
from .errors import (
    ConfigurationError,
    CsvParseError,
    CsvStructureError,
    DataError,
    InputError,
    IsoExplainError,
    ModelFormatError,
    ModelVersionError,
    NormalizationError,
)
from .explain import (
    METHOD_DIFFI,
    METHOD_OURS,
    METHOD_RANDOM,
    METHODS,
    ExplanationVector,
    explain_diffi_local,
    explain_ours,
    explain_random,
    normalize_explanation,
    split_score,
)
from .forest import (
    Dataset,
    Internal,
    IsolationForest,
    IsolationTree,
    Leaf,
    TreeNode,
    anomaly_score,
    average_path_length,
    fit_forest,
    fit_tree,
    harmonic,
    normalized_anomaly_score,
    nu,
    path_length,
)
from .heatmap import (
    IN_BAG,
    NO_ANOMALIES,
    OUT_OF_BAG,
    WITH_ANOMALIES,
    HeatmapCell,
    HeatmapConfig,
    contribution_fraction,
    gen_two_cluster_2d,
    grid_points,
    render_grid,
    render_grid_many,
)
from .io import format_number, load_csv, load_model, save_model, write_csv
from .synthbench import (
    SWEEP_AXES,
    AnomalizationSpec,
    ExpectedVector,
    GroundTruthResult,
    SweepPoint,
    SynthConfig,
    anomalize,
    expected_vector,
    explanation_error,
    gen_clusters,
    run_ground_truth,
    sweep,
)
from .cli import cli_main

__all__ = [
    "__version__",
    "AnomalizationSpec",
    "ConfigurationError",
    "CsvParseError",
    "CsvStructureError",
    "DataError",
    "Dataset",
    "ExpectedVector",
    "ExplanationVector",
    "GroundTruthResult",
    "HeatmapCell",
    "HeatmapConfig",
    "IN_BAG",
    "InputError",
    "Internal",
    "IsolationForest",
    "IsolationTree",
    "IsoExplainError",
    "Leaf",
    "METHOD_DIFFI",
    "METHOD_OURS",
    "METHOD_RANDOM",
    "METHODS",
    "ModelFormatError",
    "ModelVersionError",
    "NO_ANOMALIES",
    "NormalizationError",
    "OUT_OF_BAG",
    "SWEEP_AXES",
    "SweepPoint",
    "SynthConfig",
    "TimingRecord",
    "TreeNode",
    "WITH_ANOMALIES",
    "anomalize",
    "anomaly_score",
    "average_path_length",
    "bench_explain",
    "cli_main",
    "contribution_fraction",
    "expected_vector",
    "explain_diffi_local",
    "explain_ours",
    "explain_random",
    "explanation_error",
    "fit_forest",
    "fit_tree",
    "format_number",
    "gen_clusters",
    "gen_two_cluster_2d",
    "grid_points",
    "harmonic",
    "load_csv",
    "load_model",
    "normalize_explanation",
    "normalized_anomaly_score",
    "nu",
    "path_length",
    "render_grid",
    "render_grid_many",
    "run_ground_truth",
    "save_model",
    "split_score",
    "sweep",
    "write_csv",
]
