"""Ground-truth-simulation benchmark on synthetic cluster data.

The protocol plants a known explanation: pick a normal example, push a
random coalition of its attributes to a multiple of each attribute's
column maximum, and measure how far the change in the explanation vector
lands from the ideal vector that puts 1/k on each of the k changed
attributes. Errors are averaged over picks and divided by the error of a
random explanation drawn on the same picks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, InputError
from .explain import (
    METHOD_DIFFI,
    METHOD_OURS,
    METHOD_RANDOM,
    ExplanationVector,
    explain_diffi_local,
    explain_ours,
    explain_random,
    normalize_explanation,
)
from .forest import Dataset, IsolationForest, fit_forest

SWEEP_AXES = ("size", "dims", "m_fraction")

_EXPLAINERS = {METHOD_OURS: explain_ours, METHOD_DIFFI: explain_diffi_local}


@dataclass(frozen=True)
class AnomalizationSpec:
    """How to fabricate ground truth: which fraction of attributes to push,
    how many examples to evaluate, and by what multiple of the column max."""

    m_fraction: float
    n_examples: int
    multiplier: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.m_fraction <= 1.0:
            raise ConfigurationError(
                f"m_fraction must be in (0, 1], got {self.m_fraction}"
            )
        if self.n_examples < 1:
            raise ConfigurationError("n_examples must be >= 1")

    def changed_count(self, d: int) -> int:
        return max(1, int(math.floor(self.m_fraction * d + 0.5)))


@dataclass(frozen=True)
class ExpectedVector:
    """Ideal explanation: 1/k on each changed attribute, 0 elsewhere."""

    weights: np.ndarray
    changed: frozenset[int]


@dataclass(frozen=True)
class GroundTruthResult:
    method_tag: str
    mean_error: float
    normalized_error: float
    errors: tuple[float, ...]  # per pick; nan marks an excluded degenerate pick
    n_excluded: int = 0


@dataclass(frozen=True)
class SynthConfig:
    """Base configuration for synthetic sweeps."""

    n: int = 1000
    d: int = 6
    n_clusters: int = 2
    trees: int = 100
    psi: int = 256
    m_fraction: float = 0.5
    n_examples: int = 100
    multiplier: float = 3.0
    seed: int = 0


@dataclass(frozen=True)
class SweepPoint:
    axis: str
    axis_value: float
    results: tuple[GroundTruthResult, ...]


def gen_clusters(n: int, d: int, n_clusters: int, seed: int) -> Dataset:
    """n points split evenly over isotropic unit-variance Gaussians whose
    centers sit at +5 or -5 on every coordinate, alternating by cluster."""
    if n_clusters < 1:
        raise ConfigurationError("need at least one cluster")
    if n < n_clusters:
        raise ConfigurationError(f"cannot spread {n} points over {n_clusters} clusters")
    if d < 1:
        raise ConfigurationError("dimensionality must be >= 1")
    rng = np.random.default_rng(seed)
    base, extra = divmod(n, n_clusters)
    blocks = []
    for i in range(n_clusters):
        size = base + (1 if i < extra else 0)
        center = 5.0 if i % 2 == 0 else -5.0
        blocks.append(rng.normal(center, 1.0, (size, d)))
    return Dataset(np.vstack(blocks))


def anomalize(data: Dataset, example_index: int, changed, multiplier: float) -> np.ndarray:
    """Copy one example and set each changed attribute j to
    multiplier * max over all rows of column j. Other attributes untouched."""
    changed = sorted(int(j) for j in changed)
    if not changed:
        raise InputError("changed attribute set is empty")
    if changed[0] < 0 or changed[-1] >= data.d:
        raise InputError(f"changed attributes {changed} out of range for d={data.d}")
    if not 0 <= example_index < data.n:
        raise InputError(f"example index {example_index} out of range for n={data.n}")
    x = data.values[example_index].copy()
    for j in changed:
        x[j] = multiplier * data.values[:, j].max()
    return x


def expected_vector(changed, d: int) -> ExpectedVector:
    changed = frozenset(int(j) for j in changed)
    if not changed:
        raise InputError("changed attribute set is empty")
    if min(changed) < 0 or max(changed) >= d:
        raise InputError(f"changed attributes out of range for d={d}")
    w = np.zeros(d)
    w[list(changed)] = 1.0 / len(changed)
    w.setflags(write=False)
    return ExpectedVector(w, changed)


def explanation_error(w_e: ExpectedVector, w: ExplanationVector) -> float:
    """Euclidean distance between the expected and the provided vector."""
    if len(w_e.weights) != len(w.weights):
        raise InputError("expected and provided vectors differ in length")
    return float(np.linalg.norm(w_e.weights - w.weights))


def run_ground_truth(
    data: Dataset,
    forest: IsolationForest,
    spec: AnomalizationSpec,
    methods,
) -> list[GroundTruthResult]:
    """Run the anomalize-and-re-explain protocol.

    Per pick (drawn with replacement): explain the original example, push k
    random attributes, explain the modified example, L1-normalize the change
    in explanation, and take its distance to the expected vector. The change
    is oriented toward the new explanation so that attributes made anomalous
    carry positive weight. Mean errors are normalized by a fresh random
    explanation drawn per pick. Picks whose change vector is exactly zero are
    excluded and counted.
    """
    methods = list(dict.fromkeys(methods))
    for tag in methods:
        if tag not in (METHOD_OURS, METHOD_DIFFI, METHOD_RANDOM):
            raise ConfigurationError(f"unknown method tag {tag!r}")
    if not methods:
        raise ConfigurationError("no methods requested")
    if forest.d != data.d:
        raise InputError(f"forest expects d={forest.d}, data has d={data.d}")
    rng = np.random.default_rng(spec.seed)
    k = spec.changed_count(data.d)
    picks = rng.integers(0, data.n, size=spec.n_examples)
    changed_sets = [rng.choice(data.d, size=k, replace=False) for _ in picks]
    random_vectors = [explain_random(data.d, rng) for _ in picks]

    per_method: dict[str, list[float]] = {tag: [] for tag in _EXPLAINERS}
    random_errors: list[float] = []
    for pick, changed, rvec in zip(picks, changed_sets, random_vectors):
        w_e = expected_vector(changed, data.d)
        x0 = data.values[pick]
        x_new = anomalize(data, int(pick), changed, spec.multiplier)
        for tag in methods:
            if tag == METHOD_RANDOM:
                continue
            explainer = _EXPLAINERS[tag]
            w0 = explainer(forest, x0)
            w_new = explainer(forest, x_new)
            change = ExplanationVector(w_new.weights - w0.weights, tag)
            if np.abs(change.weights).sum() == 0.0:
                per_method[tag].append(math.nan)
                continue
            per_method[tag].append(
                explanation_error(w_e, normalize_explanation(change))
            )
        random_errors.append(explanation_error(w_e, rvec))

    random_mean = float(np.mean(random_errors))
    results = []
    for tag in methods:
        if tag == METHOD_RANDOM:
            errs = random_errors
            mean = random_mean
            excluded = 0
        else:
            errs = per_method[tag]
            excluded = sum(1 for e in errs if math.isnan(e))
            mean = float(np.nanmean(errs)) if excluded < len(errs) else math.nan
        results.append(
            GroundTruthResult(
                method_tag=tag,
                mean_error=mean,
                normalized_error=mean / random_mean,
                errors=tuple(errs),
                n_excluded=excluded,
            )
        )
    return results


def sweep(axis: str, grid, base: SynthConfig, methods) -> list[SweepPoint]:
    """One ground-truth run per grid value, holding everything else fixed."""
    if axis not in SWEEP_AXES:
        raise ConfigurationError(f"unknown sweep axis {axis!r}, expected one of {SWEEP_AXES}")
    grid = list(grid)
    if not grid:
        raise ConfigurationError("sweep grid is empty")
    points = []
    for value in grid:
        if axis == "size":
            cfg = replace(base, n=int(value))
        elif axis == "dims":
            cfg = replace(base, d=int(value))
        else:
            cfg = replace(base, m_fraction=float(value))
        data = gen_clusters(cfg.n, cfg.d, cfg.n_clusters, cfg.seed)
        forest = fit_forest(data, cfg.trees, cfg.psi, cfg.seed)
        spec = AnomalizationSpec(
            m_fraction=cfg.m_fraction,
            n_examples=cfg.n_examples,
            multiplier=cfg.multiplier,
            seed=cfg.seed,
        )
        results = run_ground_truth(data, forest, spec, methods)
        points.append(SweepPoint(axis=axis, axis_value=float(value), results=tuple(results)))
    return points
