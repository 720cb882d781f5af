"""Command-line surface tying training, scoring, explaining, and the
experiment harness together.

Every command accepts --seed and is bit-reproducible in its CSV outputs for
a fixed seed (timing measurements excepted). A flat key=value config file
supplies defaults that flags override. Exit codes: 0 ok, 1 runtime error,
2 usage error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import bench_explain
from .errors import ConfigurationError, IsoExplainError
from .explain import (
    METHOD_DIFFI,
    METHOD_OURS,
    METHOD_RANDOM,
    METHODS,
    explain_diffi_local,
    explain_ours,
    explain_random,
    normalize_explanation,
)
from .forest import anomaly_score, fit_forest, normalized_anomaly_score
from .heatmap import (
    IN_BAG,
    NO_ANOMALIES,
    OUT_OF_BAG,
    WITH_ANOMALIES,
    HeatmapConfig,
    render_grid_many,
)
from .io import atomic_write_text, format_number, load_csv, load_model, save_model
from .synthbench import (
    SWEEP_AXES,
    AnomalizationSpec,
    SynthConfig,
    run_ground_truth,
    sweep,
)

DEFAULT_TREES = 100
DEFAULT_PSI = 256

# expected (rows, columns) per declared dataset id; mismatches warn, not fail
KNOWN_DATASET_SHAPES = {
    "glass": (214, 10),
    "cardio": (1831, 21),
    "ionosphere": (351, 33),
    "lympho": (148, 18),
    "musk": (3062, 166),
    "letter": (1600, 32),
}

HEATMAP_SETTINGS = {
    "ib_a": (IN_BAG, WITH_ANOMALIES),
    "oob_a": (OUT_OF_BAG, WITH_ANOMALIES),
    "ib_noa": (IN_BAG, NO_ANOMALIES),
    "oob_noa": (OUT_OF_BAG, NO_ANOMALIES),
}


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {text!r}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}") from exc


def _method_list(text: str) -> list[str]:
    tags = [v.strip() for v in text.split(",") if v.strip() != ""]
    for tag in tags:
        if tag not in METHODS:
            raise argparse.ArgumentTypeError(
                f"unknown method {tag!r}, expected any of {', '.join(METHODS)}"
            )
    return tags


def _setting_list(text: str) -> list[str]:
    if text == "all":
        return list(HEATMAP_SETTINGS)
    keys = [v.strip() for v in text.split(",") if v.strip() != ""]
    for key in keys:
        if key not in HEATMAP_SETTINGS:
            raise argparse.ArgumentTypeError(
                f"unknown setting {key!r}, expected 'all' or any of {', '.join(HEATMAP_SETTINGS)}"
            )
    return keys


def build_parser() -> tuple[argparse.ArgumentParser, list[argparse.ArgumentParser]]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument("--threads", type=int, default=1, help="parallel worker cap (default 1)")
    common.add_argument("--config", type=Path, help="flat key=value config file; flags override it")

    parser = argparse.ArgumentParser(
        prog="isoexplain",
        description="Isolation forests with per-example attribute attributions.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    leaves: list[argparse.ArgumentParser] = []

    p = sub.add_parser("train", parents=[common], help="fit a forest on a CSV and save it")
    p.add_argument("--data", type=Path, required=True, help="numeric CSV, optional header")
    p.add_argument("--model", type=Path, required=True, help="output model path")
    p.add_argument("--trees", type=int, default=DEFAULT_TREES)
    p.add_argument("--psi", type=int, default=DEFAULT_PSI, help="subsample size per tree")
    p.set_defaults(func=cmd_train)
    leaves.append(p)

    p = sub.add_parser("score", parents=[common], help="anomaly scores for every CSV row")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="output CSV")
    p.set_defaults(func=cmd_score)
    leaves.append(p)

    p = sub.add_parser("explain", parents=[common], help="explanation vectors for every CSV row")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--method", choices=METHODS, default=METHOD_OURS)
    p.add_argument("--normalize", action="store_true", help="L1-normalize each vector")
    p.add_argument("--out", type=Path, required=True, help="output CSV")
    p.set_defaults(func=cmd_explain)
    leaves.append(p)

    exp = sub.add_parser("experiment", help="benchmark experiments emitting result CSVs")
    exp_sub = exp.add_subparsers(dest="experiment", required=True, metavar="kind")

    p = exp_sub.add_parser("synth", parents=[common], help="ground-truth sweep on synthetic clusters")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--axis", choices=SWEEP_AXES, default="m_fraction")
    p.add_argument("--grid", type=_float_list, default=[0.25, 0.5, 1.0],
                   help="comma-separated sweep values (default 0.25,0.5,1.0)")
    p.add_argument("--size", type=int, default=1000, help="points per dataset")
    p.add_argument("--dims", type=int, default=6)
    p.add_argument("--clusters", type=int, default=2)
    p.add_argument("--trees", type=int, default=DEFAULT_TREES)
    p.add_argument("--psi", type=int, default=DEFAULT_PSI)
    p.add_argument("--m-fraction", type=float, default=0.5,
                   help="anomalized fraction when not the sweep axis")
    p.add_argument("--n-examples", type=int, default=100, help="picks per run")
    p.add_argument("--multiplier", type=float, default=3.0)
    p.add_argument("--methods", type=_method_list, default=list(METHODS))
    p.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
    p.set_defaults(func=cmd_experiment_synth)
    leaves.append(p)

    p = exp_sub.add_parser("real", parents=[common], help="ground-truth m-sweep on a user CSV")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--dataset-id", default=None,
                   help="declared dataset id; known shapes are checked with a warning")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--grid", type=_float_list, default=[0.1, 0.25, 0.5, 1.0],
                   help="m fractions (default 0.1,0.25,0.5,1.0)")
    p.add_argument("--trees", type=int, default=DEFAULT_TREES)
    p.add_argument("--psi", type=int, default=DEFAULT_PSI)
    p.add_argument("--n-examples", type=int, default=100)
    p.add_argument("--multiplier", type=float, default=3.0)
    p.add_argument("--methods", type=_method_list, default=list(METHODS))
    p.add_argument("--seeds", type=int, default=1)
    p.set_defaults(func=cmd_experiment_real)
    leaves.append(p)

    p = exp_sub.add_parser("heatmap", parents=[common],
                           help="two-attribute contribution grids on the two-cluster layout")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--resolution", type=int, default=50)
    p.add_argument("--methods", type=_method_list, default=[METHOD_OURS, METHOD_DIFFI])
    p.add_argument("--settings", type=_setting_list, default=list(HEATMAP_SETTINGS),
                   help="comma-separated subset of ib_a,oob_a,ib_noa,oob_noa, or 'all'")
    p.add_argument("--trees", type=int, default=DEFAULT_TREES)
    p.add_argument("--psi", type=int, default=DEFAULT_PSI)
    p.set_defaults(func=cmd_experiment_heatmap)
    leaves.append(p)

    p = sub.add_parser("bench", parents=[common], help="per-example explanation timing")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--dataset-id", default="data")
    p.add_argument("--methods", type=_method_list, default=[METHOD_OURS, METHOD_DIFFI])
    p.add_argument("--m-grid", type=_float_list, default=[0.1, 1.0])
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--out", type=Path, required=True, help="output CSV")
    p.set_defaults(func=cmd_bench)
    leaves.append(p)

    return parser, leaves


def _load_config_file(path: Path) -> dict[str, str]:
    values: dict[str, str] = {}
    for line_num, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigurationError(f"{path}:{line_num}: expected key=value, got {stripped!r}")
        key, _, value = stripped.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _apply_config(parsers: list[argparse.ArgumentParser], cfg: dict[str, str]) -> None:
    known: set[str] = set()
    for p in parsers:
        for action in p._actions:
            known.add(action.dest)
            if action.dest in cfg:
                raw = cfg[action.dest]
                if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                    value = raw.lower() in ("1", "true", "yes", "on")
                elif action.type is not None:
                    value = action.type(raw)
                else:
                    value = raw
                p.set_defaults(**{action.dest: value})
    unknown = set(cfg) - known
    if unknown:
        raise ConfigurationError(f"unknown config keys: {', '.join(sorted(unknown))}")


def _scan_config_path(argv: list[str]) -> Path | None:
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            return Path(argv[i + 1])
        if arg.startswith("--config="):
            return Path(arg.split("=", 1)[1])
    return None


def _write_csv_rows(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_format_field(v) for v in row))
    path.parent.mkdir(parents=True, exist_ok=True)
    atomic_write_text(path, "\n".join(lines) + "\n")


def _format_field(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return format_number(v)
    return str(v)


def cmd_train(args) -> int:
    data = load_csv(args.data)
    forest = fit_forest(data, args.trees, args.psi, args.seed)
    save_model(forest, args.model)
    print(f"trained {args.trees} trees (psi={args.psi}) on {data.n}x{data.d} data -> {args.model}")
    return 0


def cmd_score(args) -> int:
    forest = load_model(args.model)
    data = load_csv(args.data)
    rows = [
        [i, anomaly_score(forest, x), normalized_anomaly_score(forest, x)]
        for i, x in enumerate(data.values)
    ]
    _write_csv_rows(args.out, ["example_id", "anomaly_score", "normalized_score"], rows)
    print(f"scored {data.n} examples -> {args.out}")
    return 0


def cmd_explain(args) -> int:
    forest = load_model(args.model)
    data = load_csv(args.data)
    rng = np.random.default_rng(args.seed)
    rows = []
    for i, x in enumerate(data.values):
        if args.method == METHOD_OURS:
            vec = explain_ours(forest, x)
        elif args.method == METHOD_DIFFI:
            vec = explain_diffi_local(forest, x)
        else:
            vec = explain_random(data.d, rng)
        if args.normalize:
            vec = normalize_explanation(vec)
        rows.append([i, args.method, *vec.weights.tolist(), anomaly_score(forest, x)])
    header = ["example_id", "method", *(f"w_{c}" for c in data.column_names), "anomaly_score"]
    _write_csv_rows(args.out, header, rows)
    print(f"explained {data.n} examples with {args.method} -> {args.out}")
    return 0


def _emit_ground_truth_tables(out_dir: Path, stem: str, axis: str, collected) -> None:
    """collected: list of (seed, axis_value, GroundTruthResult)."""
    pick_rows = []
    for seed, axis_value, res in collected:
        for pick_index, err in enumerate(res.errors):
            pick_rows.append([seed, axis, axis_value, res.method_tag, pick_index, err])
    _write_csv_rows(
        out_dir / f"{stem}_picks.csv",
        ["run_id", "axis", "axis_value", "method", "pick_index", "error"],
        pick_rows,
    )

    grouped: dict[tuple[float, str], list] = {}
    for seed, axis_value, res in collected:
        grouped.setdefault((axis_value, res.method_tag), []).append(res)
    agg_rows = []
    for (axis_value, tag), results in sorted(grouped.items()):
        mean_error = float(np.mean([r.mean_error for r in results]))
        normalized = float(np.mean([r.normalized_error for r in results]))
        excluded = sum(r.n_excluded for r in results)
        agg_rows.append([axis, axis_value, tag, mean_error, normalized, excluded])
        if excluded:
            print(
                f"warning: {excluded} degenerate zero-change picks excluded "
                f"for {tag} at {axis}={axis_value}",
                file=sys.stderr,
            )
    _write_csv_rows(
        out_dir / f"{stem}_aggregate.csv",
        ["axis", "axis_value", "method", "mean_error", "normalized_error", "n_excluded"],
        agg_rows,
    )


def cmd_experiment_synth(args) -> int:
    collected = []
    for seed in range(args.seed, args.seed + args.seeds):
        base = SynthConfig(
            n=args.size,
            d=args.dims,
            n_clusters=args.clusters,
            trees=args.trees,
            psi=args.psi,
            m_fraction=args.m_fraction,
            n_examples=args.n_examples,
            multiplier=args.multiplier,
            seed=seed,
        )
        for point in sweep(args.axis, args.grid, base, args.methods):
            for res in point.results:
                collected.append((seed, point.axis_value, res))
    _emit_ground_truth_tables(args.out, "synth", args.axis, collected)
    print(f"synthetic {args.axis} sweep over {args.grid} -> {args.out}")
    return 0


def cmd_experiment_real(args) -> int:
    data = load_csv(args.data)
    if args.dataset_id and args.dataset_id in KNOWN_DATASET_SHAPES:
        expected = KNOWN_DATASET_SHAPES[args.dataset_id]
        if (data.n, data.d) != expected:
            print(
                f"warning: {args.dataset_id} is usually {expected[0]}x{expected[1]}, "
                f"this file is {data.n}x{data.d}",
                file=sys.stderr,
            )
    collected = []
    for seed in range(args.seed, args.seed + args.seeds):
        forest = fit_forest(data, args.trees, args.psi, seed)
        for m in args.grid:
            spec = AnomalizationSpec(
                m_fraction=m,
                n_examples=args.n_examples,
                multiplier=args.multiplier,
                seed=seed,
            )
            for res in run_ground_truth(data, forest, spec, args.methods):
                collected.append((seed, m, res))
    _emit_ground_truth_tables(args.out, "real", "m_fraction", collected)
    print(f"real-data m sweep over {args.grid} -> {args.out}")
    return 0


def cmd_experiment_heatmap(args) -> int:
    rows = []
    for key in args.settings:
        bag, anomalies = HEATMAP_SETTINGS[key]
        config = HeatmapConfig(
            bag=bag,
            anomalies=anomalies,
            method_tag=args.methods[0],
            grid_resolution=args.resolution,
            trees=args.trees,
            psi=args.psi,
            seed=args.seed,
        )
        grids = render_grid_many(config, args.methods, workers=args.threads)
        for tag in args.methods:
            for cell in grids[tag]:
                rows.append([cell.x1, cell.x2, tag, config.setting, cell.contribution_x1])
    out = args.out / "heatmap.csv"
    _write_csv_rows(out, ["x1", "x2", "method", "setting", "contribution_x1"], rows)
    print(f"heatmap grids ({args.resolution}x{args.resolution}, {len(args.settings)} settings) -> {out}")
    return 0


def cmd_bench(args) -> int:
    import time

    forest = load_model(args.model)
    data = load_csv(args.data)
    # training cost is reported separately and never enters the timing CSV
    t0 = time.perf_counter()
    fit_forest(data, forest.t, forest.psi, forest.rng_seed)
    train_seconds = time.perf_counter() - t0
    records = bench_explain(
        forest,
        data,
        args.methods,
        args.m_grid,
        args.repeats,
        dataset_id=args.dataset_id,
        seed=args.seed,
    )
    rows = [[r.method, r.dataset_id, r.m_fraction, r.seconds_per_example] for r in records]
    _write_csv_rows(args.out, ["method", "dataset", "m_fraction", "seconds_per_example"], rows)
    print(f"training time: {train_seconds:.3f} s (not part of the timing CSV)")
    print(f"timed {len(records)} (method, m) combinations -> {args.out}")
    return 0


def cli_main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    argv = list(argv)
    parser, leaves = build_parser()
    try:
        config_path = _scan_config_path(argv)
        if config_path is not None:
            _apply_config(leaves, _load_config_file(config_path))
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except IsoExplainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except IsoExplainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
