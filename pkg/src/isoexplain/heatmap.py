"""Two-attribute contribution grids over a two-cluster 2-D layout.

For every point of a grid, explain that point against a forest and record
which share of the (clipped) explanation mass the first attribute carries.
The forest is either retrained per grid point with the point added to the
training pool (in-bag) or trained once on the plain data (out-of-bag), and
the training data can carry a sprinkle of uniform anomalies or not.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InputError
from .explain import (
    METHOD_DIFFI,
    METHOD_OURS,
    ExplanationVector,
    explain_diffi_local,
    explain_ours,
)
from .forest import Dataset, fit_forest

IN_BAG = "in_bag"
OUT_OF_BAG = "out_of_bag"
WITH_ANOMALIES = "with_anomalies"
NO_ANOMALIES = "no_anomalies"

_GRID_EXPLAINERS = {METHOD_OURS: explain_ours, METHOD_DIFFI: explain_diffi_local}

ANOMALY_FRACTION = 0.02
CLUSTER_SIZE = 500
BOX = ((-10.0, 10.0), (-10.0, 10.0))


@dataclass(frozen=True)
class HeatmapConfig:
    bag: str = IN_BAG
    anomalies: str = WITH_ANOMALIES
    method_tag: str = METHOD_OURS
    grid_resolution: int = 50
    bounds: tuple[tuple[float, float], tuple[float, float]] = BOX
    trees: int = 100
    psi: int = 256
    seed: int = 0

    def __post_init__(self):
        if self.bag not in (IN_BAG, OUT_OF_BAG):
            raise ConfigurationError(f"bag setting must be {IN_BAG} or {OUT_OF_BAG}")
        if self.anomalies not in (WITH_ANOMALIES, NO_ANOMALIES):
            raise ConfigurationError(
                f"anomaly setting must be {WITH_ANOMALIES} or {NO_ANOMALIES}"
            )
        if self.method_tag not in _GRID_EXPLAINERS:
            raise ConfigurationError(f"unknown grid method {self.method_tag!r}")
        if self.grid_resolution < 2:
            raise ConfigurationError("grid resolution must be >= 2")
        (x1lo, x1hi), (x2lo, x2hi) = self.bounds
        if not (x1lo < x1hi and x2lo < x2hi):
            raise ConfigurationError(f"empty bounds {self.bounds}")

    @property
    def setting(self) -> str:
        return f"{self.bag}_{self.anomalies}"


@dataclass(frozen=True)
class HeatmapCell:
    x1: float
    x2: float
    contribution_x1: float


def gen_two_cluster_2d(with_anomalies: bool, seed: int) -> Dataset:
    """500 unit-variance Gaussian points at (-5,-5) plus 500 at (5,5);
    with anomalies, 2% extra points drawn uniformly over the display box."""
    rng = np.random.default_rng(seed)
    blocks = [
        rng.normal((-5.0, -5.0), 1.0, (CLUSTER_SIZE, 2)),
        rng.normal((5.0, 5.0), 1.0, (CLUSTER_SIZE, 2)),
    ]
    if with_anomalies:
        n_anom = round(ANOMALY_FRACTION * 2 * CLUSTER_SIZE)
        lo = np.array([BOX[0][0], BOX[1][0]])
        hi = np.array([BOX[0][1], BOX[1][1]])
        blocks.append(rng.uniform(lo, hi, (n_anom, 2)))
    return Dataset(np.vstack(blocks), column_names=("x1", "x2"))


def contribution_fraction(w: ExplanationVector) -> float:
    """Share of the positive explanation mass on the first of two attributes.

    Negative entries mark normal-direction evidence and are clipped to zero;
    when nothing positive remains the split is reported as even (0.5).
    """
    if w.d != 2:
        raise InputError(f"contribution fraction needs d=2, got d={w.d}")
    a = max(float(w.weights[0]), 0.0)
    b = max(float(w.weights[1]), 0.0)
    if a + b == 0.0:
        return 0.5
    return a / (a + b)


def grid_points(config: HeatmapConfig) -> tuple[np.ndarray, np.ndarray]:
    (x1lo, x1hi), (x2lo, x2hi) = config.bounds
    xs = np.linspace(x1lo, x1hi, config.grid_resolution)
    ys = np.linspace(x2lo, x2hi, config.grid_resolution)
    return xs, ys


def render_grid(config: HeatmapConfig, workers: int = 1) -> list[HeatmapCell]:
    """Contribution of the first attribute at every grid point, row-major
    (x2 outer, x1 inner). In-bag mode retrains one forest per point on the
    training data plus that point, always from the configured seed, so cells
    differ only through the added point."""
    return render_grid_many(config, [config.method_tag], workers=workers)[config.method_tag]


def render_grid_many(
    config: HeatmapConfig, methods, workers: int = 1
) -> dict[str, list[HeatmapCell]]:
    """Like ``render_grid`` but explains each grid point with several methods
    against the same forests, which halves the in-bag retraining bill."""
    methods = list(dict.fromkeys(methods))
    for tag in methods:
        if tag not in _GRID_EXPLAINERS:
            raise ConfigurationError(f"unknown grid method {tag!r}")
    data = gen_two_cluster_2d(config.anomalies == WITH_ANOMALIES, config.seed)
    xs, ys = grid_points(config)
    points = [(float(x1), float(x2)) for x2 in ys for x1 in xs]

    if config.bag == OUT_OF_BAG:
        forest = fit_forest(data, config.trees, config.psi, config.seed)
        rows = [_explain_point(forest, p, methods) for p in points]
    else:
        payloads = [(data.values, p, config.trees, config.psi, config.seed, methods) for p in points]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(_in_bag_cell, payloads, chunksize=16))
        else:
            rows = [_in_bag_cell(payload) for payload in payloads]

    out: dict[str, list[HeatmapCell]] = {tag: [] for tag in methods}
    for (x1, x2), fractions in zip(points, rows):
        for tag in methods:
            out[tag].append(HeatmapCell(x1=x1, x2=x2, contribution_x1=fractions[tag]))
    return out


def _explain_point(forest, point, methods) -> dict[str, float]:
    x = np.asarray(point)
    return {
        tag: contribution_fraction(_GRID_EXPLAINERS[tag](forest, x)) for tag in methods
    }


def _in_bag_cell(payload) -> dict[str, float]:
    values, point, trees, psi, seed, methods = payload
    pool_data = Dataset(np.vstack([values, [point]]))
    forest = fit_forest(pool_data, trees, psi, seed)
    return _explain_point(forest, point, methods)
