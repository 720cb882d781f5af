#!/usr/bin/env python3
"""Render attribute-contribution heatmaps from a grid CSV.

Usage: plot_heatmap.py HEATMAP_CSV OUTPUT_IMAGE

One panel per (method, setting) pair found in the file. Cell color encodes
the first attribute's contribution on a diverging blue/red scale: blue means
x1 explains the point, red means x2 does, white is an even split. The input
is never modified; schema mismatches abort with a nonzero exit.
"""

import argparse
import sys

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

REQUIRED_COLUMNS = {"x1", "x2", "method", "setting", "contribution_x1"}

# blue at 1 (x1 side), red at 0 (x2 side)
CMAP = "bwr_r"

SETTING_LABELS = {
    "in_bag_with_anomalies": "IB, A",
    "out_of_bag_with_anomalies": "OOB, A",
    "in_bag_no_anomalies": "IB, No-A",
    "out_of_bag_no_anomalies": "OOB, No-A",
}
SETTING_ORDER = list(SETTING_LABELS)


def load_grid(path: str) -> pd.DataFrame:
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


def panel_matrix(group: pd.DataFrame):
    """Pivot one (method, setting) block into a dense grid plus its extent."""
    pivot = group.pivot_table(index="x2", columns="x1", values="contribution_x1")
    extent = (
        float(pivot.columns.min()),
        float(pivot.columns.max()),
        float(pivot.index.min()),
        float(pivot.index.max()),
    )
    return pivot.to_numpy(), extent


def plot_heatmap(table: pd.DataFrame):
    methods = list(dict.fromkeys(table["method"]))
    settings = [s for s in SETTING_ORDER if s in set(table["setting"])]
    settings += [s for s in dict.fromkeys(table["setting"]) if s not in settings]
    n_rows, n_cols = len(methods), len(settings)
    fig, axes = plt.subplots(
        n_rows, n_cols, figsize=(3.0 * n_cols, 2.8 * n_rows), squeeze=False
    )
    image = None
    for r, method in enumerate(methods):
        for c, setting in enumerate(settings):
            ax = axes[r][c]
            block = table[(table["method"] == method) & (table["setting"] == setting)]
            matrix, extent = panel_matrix(block)
            image = ax.imshow(
                matrix, origin="lower", extent=extent, cmap=CMAP,
                vmin=0.0, vmax=1.0, aspect="auto",
            )
            ax.set_title(f"{method}: {SETTING_LABELS.get(setting, setting)}", fontsize=9)
            ax.set_xlabel("x1", fontsize=8)
            ax.set_ylabel("x2", fontsize=8)
            ax.tick_params(labelsize=7)
    fig.colorbar(image, ax=np.asarray(axes).ravel().tolist(), shrink=0.9,
                 label="contribution of x1")
    return fig


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("input_csv")
    parser.add_argument("output_image")
    args = parser.parse_args(argv)
    try:
        table = load_grid(args.input_csv)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    fig = plot_heatmap(table)
    fig.savefig(args.output_image, dpi=150)
    plt.close(fig)
    print(f"wrote {args.output_image}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
