"""Per-example attribution vectors over a trained forest.

Three methods share one output type: the split-imbalance attribution
("ours"), the constant-per-path depth baseline ("diffi_local"), and a
normalized random baseline ("random"). Positive weight means the attribute
pushed the example toward looking anomalous, negative toward normal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NormalizationError
from .forest import IsolationForest, _check_example

METHOD_OURS = "ours"
METHOD_DIFFI = "diffi_local"
METHOD_RANDOM = "random"
METHODS = (METHOD_OURS, METHOD_DIFFI, METHOD_RANDOM)


@dataclass(frozen=True)
class ExplanationVector:
    """Length-d attribute weights plus the tag of the method that made them."""

    weights: np.ndarray
    method_tag: str

    @property
    def d(self) -> int:
        return len(self.weights)


def split_score(parent_size: int, child_size: int) -> float:
    """Reward for one split edge: log2(parent/child) - 1.

    Zero for an exactly halving split, positive when the routed child is the
    smaller one, approaching -1 when the child keeps nearly every row.
    """
    if child_size < 1:
        raise InputError(f"child size must be >= 1, got {child_size}")
    if child_size >= parent_size:
        raise InputError(
            f"child size {child_size} must be smaller than parent size {parent_size}"
        )
    return math.log2(parent_size / child_size) - 1.0


def explain_ours(forest: IsolationForest, x) -> ExplanationVector:
    """Accumulate split scores along x's path through every tree.

    Each traversed edge adds log2(parent size / landed-child size) - 1 to the
    weight of the attribute the parent split on. No normalization here.
    All trees advance together, one level per iteration.
    """
    x = _check_example(x, forest.d)
    feats = forest._node_features
    vals = forest._node_values
    sizes = forest._node_sizes
    lefts = forest._node_lefts
    rights = forest._node_rights
    w = np.zeros(forest.d)
    cur = forest._root_ids.copy()
    f = feats[cur]
    active = f >= 0
    while active.any():
        acur = cur[active]
        fa = f[active]
        go_left = x[fa] < vals[acur]
        child = np.where(go_left, lefts[acur], rights[acur])
        np.add.at(w, fa, np.log2(sizes[acur] / sizes[child]) - 1.0)
        cur[active] = child
        f = feats[cur]
        active = f >= 0
    return ExplanationVector(w, METHOD_OURS)


def explain_diffi_local(forest: IsolationForest, x) -> ExplanationVector:
    """Depth-only baseline: every edge on x's path in a tree adds the same
    1/h - 1/log2(root size), with h the leaf depth in that tree.

    Trees that isolate x at depth 0 (single-leaf trees) contribute nothing.
    """
    x = _check_example(x, forest.d)
    feats = forest._node_features
    vals = forest._node_values
    lefts = forest._node_lefts
    rights = forest._node_rights
    cur = forest._root_ids.copy()
    tree_ids = np.arange(len(cur))
    step_features = []  # per level: (tree ids stepped, feature stepped on)
    f = feats[cur]
    active = f >= 0
    while active.any():
        acur = cur[active]
        fa = f[active]
        step_features.append((tree_ids[active], fa))
        go_left = x[fa] < vals[acur]
        cur[active] = np.where(go_left, lefts[acur], rights[acur])
        f = feats[cur]
        active = f >= 0
    depths = np.zeros(len(cur), dtype=np.int64)
    for stepped, _ in step_features:
        depths[stepped] += 1
    balanced_depth = np.log2(
        np.array([tree.sample_size for tree in forest.trees], dtype=np.float64)
    )
    # depth-0 trees are masked out, so their divisions may hit 0 harmlessly
    with np.errstate(divide="ignore", invalid="ignore"):
        per_tree = np.where(depths > 0, 1.0 / depths - 1.0 / balanced_depth, 0.0)
    w = np.zeros(forest.d)
    for stepped, fa in step_features:
        np.add.at(w, fa, per_tree[stepped])
    return ExplanationVector(w, METHOD_DIFFI)


def explain_random(d: int, rng: np.random.Generator) -> ExplanationVector:
    """d i.i.d. uniforms on [0, 1), normalized to sum to 1."""
    if d < 1:
        raise InputError(f"attribute count must be >= 1, got {d}")
    v = rng.random(d)
    total = v.sum()
    while total == 0.0:
        v = rng.random(d)
        total = v.sum()
    return ExplanationVector(v / total, METHOD_RANDOM)


def normalize_explanation(w: ExplanationVector) -> ExplanationVector:
    """Divide by the L1 mass so mixed-sign vectors stay bounded; vectors with
    only non-negative entries end up summing to 1."""
    mass = float(np.abs(w.weights).sum())
    if mass == 0.0:
        raise NormalizationError("all-zero explanation vector cannot be normalized")
    return ExplanationVector(w.weights / mass, w.method_tag)
