"""Figure scripts consume the harness CSVs and emit images.

The fixture CSVs are produced by the primary package's CLI (subprocess), so
these tests exercise the real file interface end to end.
"""

import importlib.util
import subprocess
import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

FIGURES_DIR = Path(__file__).resolve().parents[1]
RMSE_SCRIPT = FIGURES_DIR / "plot_rmse_curves.py"
HEATMAP_SCRIPT = FIGURES_DIR / "plot_heatmap.py"


def load_module(path: Path):
    spec = importlib.util.spec_from_file_location(path.stem, path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


rmse_mod = load_module(RMSE_SCRIPT)
heatmap_mod = load_module(HEATMAP_SCRIPT)


def run_primary(*args):
    proc = subprocess.run(
        [sys.executable, "-m", "isoexplain", *args], capture_output=True, text=True
    )
    assert proc.returncode == 0, proc.stderr
    return proc


def run_script(script: Path, *args):
    return subprocess.run(
        [sys.executable, str(script), *[str(a) for a in args]],
        capture_output=True, text=True,
    )


@pytest.fixture(scope="module")
def harness_csvs(tmp_path_factory):
    out = tmp_path_factory.mktemp("harness")
    run_primary(
        "experiment", "synth", "--out", str(out / "synth"),
        "--grid", "0.25,0.5,1.0", "--size", "300", "--dims", "4",
        "--trees", "25", "--psi", "64", "--n-examples", "15", "--seeds", "2",
    )
    run_primary(
        "experiment", "heatmap", "--out", str(out / "hm"),
        "--resolution", "6", "--settings", "all", "--methods", "ours",
        "--trees", "15", "--psi", "64",
    )
    return out / "synth" / "synth_aggregate.csv", out / "hm" / "heatmap.csv"


# --------------------------------------------------------------- RMSE curves

def test_rmse_script_exits_zero_and_writes_image(harness_csvs, tmp_path):
    aggregate, _ = harness_csvs
    image = tmp_path / "rmse.png"
    proc = run_script(RMSE_SCRIPT, aggregate, image)
    assert proc.returncode == 0, proc.stderr
    assert image.stat().st_size > 0


def test_rmse_plot_has_one_series_per_method(harness_csvs):
    aggregate, _ = harness_csvs
    fig = rmse_mod.plot_rmse_curves(rmse_mod.load_aggregate(aggregate))
    labels = [line.get_label() for line in fig.axes[0].lines]
    assert sorted(labels) == ["diffi_local", "ours", "random"]


def test_rmse_random_series_is_flat_at_one(harness_csvs):
    aggregate, _ = harness_csvs
    fig = rmse_mod.plot_rmse_curves(rmse_mod.load_aggregate(aggregate))
    (random_line,) = [l for l in fig.axes[0].lines if l.get_label() == "random"]
    assert np.array_equal(np.asarray(random_line.get_ydata(), dtype=float), np.ones(3))


def test_rmse_script_rejects_empty_csv(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    proc = run_script(RMSE_SCRIPT, empty, tmp_path / "out.png")
    assert proc.returncode != 0
    assert "error" in proc.stderr.lower()


def test_rmse_script_rejects_schema_mismatch(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    proc = run_script(RMSE_SCRIPT, bad, tmp_path / "out.png")
    assert proc.returncode != 0
    assert "missing columns" in proc.stderr


def test_rmse_script_never_modifies_input(harness_csvs, tmp_path):
    aggregate, _ = harness_csvs
    before = aggregate.read_bytes()
    run_script(RMSE_SCRIPT, aggregate, tmp_path / "out.png")
    assert aggregate.read_bytes() == before


# --------------------------------------------------------------- heatmaps

def test_heatmap_script_four_panels_for_one_method(harness_csvs, tmp_path):
    _, grid_csv = harness_csvs
    image = tmp_path / "heatmap.png"
    proc = run_script(HEATMAP_SCRIPT, grid_csv, image)
    assert proc.returncode == 0, proc.stderr
    assert image.stat().st_size > 0
    fig = heatmap_mod.plot_heatmap(heatmap_mod.load_grid(grid_csv))
    panels = [ax for ax in fig.axes if ax.get_images()]
    assert len(panels) == 4


def test_heatmap_two_methods_make_eight_panels(harness_csvs, tmp_path):
    _, grid_csv = harness_csvs
    table = pd.read_csv(grid_csv)
    doubled = pd.concat([table, table.assign(method="diffi_local")])
    both = tmp_path / "both.csv"
    doubled.to_csv(both, index=False)
    fig = heatmap_mod.plot_heatmap(heatmap_mod.load_grid(both))
    panels = [ax for ax in fig.axes if ax.get_images()]
    assert len(panels) == 8


def test_heatmap_all_half_grid_is_uniform_midpoint(tmp_path):
    rows = ["x1,x2,method,setting,contribution_x1"]
    for x2 in (0.0, 1.0):
        for x1 in (0.0, 1.0):
            rows.append(f"{x1},{x2},ours,in_bag_with_anomalies,0.5")
    p = tmp_path / "half.csv"
    p.write_text("\n".join(rows) + "\n")
    fig = heatmap_mod.plot_heatmap(heatmap_mod.load_grid(p))
    (panel,) = [ax for ax in fig.axes if ax.get_images()]
    image = panel.get_images()[0]
    assert np.all(image.get_array() == 0.5)
    # midpoint of the diverging map renders white-ish (not a blue/red extreme)
    r, g, b, _ = image.cmap(image.norm(0.5))
    assert r > 0.9 and g > 0.9 and b > 0.9


def test_heatmap_color_orientation_blue_means_x1():
    import matplotlib.pyplot as plt

    cmap = plt.get_cmap(heatmap_mod.CMAP)
    r_hi, _, b_hi, _ = cmap(1.0)  # contribution_x1 = 1
    r_lo, _, b_lo, _ = cmap(0.0)  # contribution_x1 = 0
    assert b_hi > r_hi  # x1 side is blue
    assert r_lo > b_lo  # x2 side is red


def test_heatmap_script_rejects_schema_mismatch(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x1,x2,value\n0,0,1\n")
    proc = run_script(HEATMAP_SCRIPT, bad, tmp_path / "out.png")
    assert proc.returncode != 0
    assert "missing columns" in proc.stderr
