#!/usr/bin/env python3
"""Render normalized-error curves from an experiment aggregate CSV.

Usage: plot_rmse_curves.py AGGREGATE_CSV OUTPUT_IMAGE

One line per method against the swept axis value. The input is never
modified; a missing or malformed schema aborts with a nonzero exit.
"""

import argparse
import sys

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import pandas as pd

REQUIRED_COLUMNS = {"axis", "axis_value", "method", "mean_error", "normalized_error"}

METHOD_STYLE = {
    "ours": {"color": "tab:blue", "marker": "o"},
    "diffi_local": {"color": "tab:orange", "marker": "s"},
    "random": {"color": "tab:gray", "marker": ".", "linestyle": "--"},
}

AXIS_LABELS = {
    "m_fraction": "fraction of anomalized attributes",
    "size": "dataset size",
    "dims": "dimensionality",
}


def load_aggregate(path: str) -> pd.DataFrame:
    try:
        table = pd.read_csv(path)
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as exc:
        raise ValueError(f"{path}: not a readable CSV: {exc}") from exc
    missing = REQUIRED_COLUMNS - set(table.columns)
    if missing:
        raise ValueError(f"{path}: missing columns {sorted(missing)}")
    if table.empty:
        raise ValueError(f"{path}: no data rows")
    return table


def plot_rmse_curves(table: pd.DataFrame):
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    for method, group in table.groupby("method"):
        group = group.sort_values("axis_value")
        ax.plot(
            group["axis_value"],
            group["normalized_error"],
            label=method,
            **METHOD_STYLE.get(method, {"marker": "o"}),
        )
    axis = str(table["axis"].iloc[0])
    ax.set_xlabel(AXIS_LABELS.get(axis, axis))
    ax.set_ylabel("normalized RMSE")
    ax.set_ylim(bottom=0.0)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return fig


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("input_csv")
    parser.add_argument("output_image")
    args = parser.parse_args(argv)
    try:
        table = load_aggregate(args.input_csv)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    fig = plot_rmse_curves(table)
    fig.savefig(args.output_image, dpi=150)
    plt.close(fig)
    print(f"wrote {args.output_image}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
