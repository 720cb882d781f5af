"""Isolation-forest training, path lengths, and anomaly scores.

Trees are stored as flat parallel node arrays (split feature, split value,
node size, children, depth) in breadth-first order. The benchmark harness
retrains thousands of small forests, so growing is batched level-by-level
across every tree of the forest: each level costs a fixed handful of
vectorized operations instead of several per node. ``Leaf`` / ``Internal``
views are materialized on demand for inspection, hand-built trees, and
serialization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import ConfigurationError, DataError, InputError


class Dataset:
    """An n-by-d matrix of finite reals with named columns."""

    __slots__ = ("values", "column_names")

    def __init__(self, values, column_names: Sequence[str] | None = None):
        arr = np.ascontiguousarray(values, dtype=np.float64)
        if arr.ndim != 2:
            raise DataError(f"dataset must be 2-dimensional, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DataError(f"dataset needs at least one row and one column, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise DataError("dataset contains non-finite values")
        if column_names is None:
            column_names = [f"f{j}" for j in range(arr.shape[1])]
        column_names = tuple(str(c) for c in column_names)
        if len(column_names) != arr.shape[1]:
            raise DataError(
                f"{len(column_names)} column names for {arr.shape[1]} columns"
            )
        arr.setflags(write=False)
        self.values = arr
        self.column_names = column_names

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def __repr__(self):
        return f"Dataset(n={self.n}, d={self.d})"


@dataclass(frozen=True)
class Leaf:
    """Terminal node: how many training rows it holds and its edge depth."""

    size: int
    depth: int


@dataclass(frozen=True)
class Internal:
    """Split node: rows with x[feature] < value go left, the rest go right."""

    feature: int
    value: float
    size: int
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[Leaf, Internal]


class IsolationTree:
    """One trained tree as parallel node arrays in breadth-first order.

    ``features[i] < 0`` marks a leaf; ``lefts``/``rights`` hold tree-local
    child indices. Arrays are read-only so trees can be shared across
    threads without synchronization.
    """

    __slots__ = (
        "features",
        "values",
        "sizes",
        "lefts",
        "rights",
        "depths",
        "sample_size",
        "n_features",
    )

    def __init__(self, features, values, sizes, lefts, rights, depths, sample_size, n_features):
        self.features = features
        self.values = values
        self.sizes = sizes
        self.lefts = lefts
        self.rights = rights
        self.depths = depths
        self.sample_size = int(sample_size)
        self.n_features = int(n_features)

    @classmethod
    def from_node(cls, root: TreeNode, n_features: int) -> "IsolationTree":
        """Flatten a nested ``Leaf``/``Internal`` structure into array form."""
        features, values, sizes, lefts, rights, depths = [], [], [], [], [], []
        queue = [(root, 0)]
        while queue:
            node, depth = queue.pop(0)
            if isinstance(node, Leaf):
                features.append(-1)
                values.append(math.nan)
                sizes.append(node.size)
                lefts.append(-1)
                rights.append(-1)
                depths.append(node.depth)
                if node.size < 1:
                    raise InputError("leaf size must be >= 1")
            elif isinstance(node, Internal):
                if node.left.size + node.right.size != node.size:
                    raise InputError(
                        f"internal node size {node.size} != children sizes "
                        f"{node.left.size}+{node.right.size}"
                    )
                if not 0 <= node.feature < n_features:
                    raise InputError(f"split feature {node.feature} out of range")
                features.append(node.feature)
                values.append(float(node.value))
                sizes.append(node.size)
                lefts.append(len(features) + len(queue))
                queue.append((node.left, depth + 1))
                rights.append(len(features) + len(queue))
                queue.append((node.right, depth + 1))
                depths.append(depth)
            else:
                raise InputError(f"not a tree node: {node!r}")
        arrays = (
            np.asarray(features, dtype=np.int32),
            np.asarray(values, dtype=np.float64),
            np.asarray(sizes, dtype=np.int64),
            np.asarray(lefts, dtype=np.int32),
            np.asarray(rights, dtype=np.int32),
            np.asarray(depths, dtype=np.int32),
        )
        for a in arrays:
            a.setflags(write=False)
        return cls(*arrays, sample_size=root.size, n_features=n_features)

    @property
    def node_count(self) -> int:
        return len(self.features)

    @property
    def root(self) -> TreeNode:
        """Materialize the nested node view (children always have larger ids)."""
        n = self.node_count
        nodes: list[TreeNode | None] = [None] * n
        for i in range(n - 1, -1, -1):
            if self.features[i] < 0:
                nodes[i] = Leaf(size=int(self.sizes[i]), depth=int(self.depths[i]))
            else:
                nodes[i] = Internal(
                    feature=int(self.features[i]),
                    value=float(self.values[i]),
                    size=int(self.sizes[i]),
                    left=nodes[self.lefts[i]],
                    right=nodes[self.rights[i]],
                )
        return nodes[0]


class IsolationForest:
    """A trained ensemble. Immutable, safe for concurrent reads.

    Node arrays of all trees are also kept concatenated with absolute child
    indices, so scoring and explaining can step every tree at once with a
    handful of vector gathers per tree level instead of per edge.
    """

    __slots__ = (
        "trees",
        "psi",
        "d",
        "rng_seed",
        "_root_ids",
        "_node_features",
        "_node_values",
        "_node_sizes",
        "_node_lefts",
        "_node_rights",
        "_nu_table",
    )

    def __init__(self, trees: Sequence[IsolationTree], psi: int, d: int, rng_seed: int):
        trees = tuple(trees)
        if len(trees) < 1:
            raise ConfigurationError("a forest needs at least one tree")
        if d < 1:
            raise ConfigurationError("attribute count must be >= 1")
        for tree in trees:
            if tree.n_features != d:
                raise ConfigurationError(
                    f"tree built on {tree.n_features} attributes in a d={d} forest"
                )
        self.trees = trees
        self.psi = int(psi)
        self.d = int(d)
        self.rng_seed = int(rng_seed)
        offsets = np.cumsum([0] + [tree.node_count for tree in trees[:-1]])
        self._root_ids = offsets.astype(np.int64)
        self._node_features = np.concatenate([t.features for t in trees])
        self._node_values = np.concatenate([t.values for t in trees])
        self._node_sizes = np.concatenate([t.sizes for t in trees])
        self._node_lefts = np.concatenate(
            [np.where(t.lefts >= 0, t.lefts + off, -1) for t, off in zip(trees, offsets)]
        )
        self._node_rights = np.concatenate(
            [np.where(t.rights >= 0, t.rights + off, -1) for t, off in zip(trees, offsets)]
        )
        max_size = int(self._node_sizes.max())
        self._nu_table = 2.0 * np.cumsum(1.0 / np.arange(1, max_size + 1)) - 2.0
        for name in ("_root_ids", "_node_lefts", "_node_rights", "_nu_table"):
            getattr(self, name).setflags(write=False)

    @property
    def t(self) -> int:
        return len(self.trees)

    def __repr__(self):
        return f"IsolationForest(t={self.t}, psi={self.psi}, d={self.d}, seed={self.rng_seed})"


def harmonic(i: int) -> float:
    """The i-th harmonic number, summed directly."""
    if i < 1:
        raise InputError("harmonic number defined for i >= 1")
    return float(np.cumsum(1.0 / np.arange(1, i + 1))[-1])


def nu(i: int) -> float:
    """Expected extra path length credited to a leaf holding i points: 2*H(i) - 2."""
    if i < 1:
        raise InputError(f"leaf size must be >= 1, got {i}")
    return 2.0 * harmonic(i) - 2.0


def average_path_length(n: int) -> float:
    """Average unsuccessful-search path length c(n) of a binary search tree.

    Standard isolation-forest normalizer: 2*H(n-1) - 2*(n-1)/n for n >= 2,
    0 for smaller n.
    """
    if n <= 1:
        return 0.0
    return 2.0 * harmonic(n - 1) - 2.0 * (n - 1) / n


def _check_example(x, d: int) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.shape != (d,):
        raise InputError(f"example has shape {arr.shape}, expected ({d},)")
    if not np.isfinite(arr).all():
        raise InputError("example contains non-finite values")
    return arr


def path_length(forest_tree: IsolationTree, x) -> tuple[int, int]:
    """Route x from the root down to a leaf.

    Returns the edge count of the path and the training size recorded at the
    leaf. Ties route right: only x[feature] < value goes left.
    """
    x = _check_example(x, forest_tree.n_features)
    feats = forest_tree.features
    vals = forest_tree.values
    lefts = forest_tree.lefts
    rights = forest_tree.rights
    i = 0
    depth = 0
    f = feats[0]
    while f >= 0:
        i = lefts[i] if x[f] < vals[i] else rights[i]
        f = feats[i]
        depth += 1
    return depth, int(forest_tree.sizes[i])


def descend_forest(forest: IsolationForest, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Route a checked example through every tree at once.

    Returns per-tree leaf depths (edge counts) and leaf sizes. One iteration
    of the loop advances all trees that have not reached a leaf yet.
    """
    feats = forest._node_features
    vals = forest._node_values
    lefts = forest._node_lefts
    rights = forest._node_rights
    cur = forest._root_ids.copy()
    depths = np.zeros(len(cur), dtype=np.int64)
    f = feats[cur]
    active = f >= 0
    while active.any():
        acur = cur[active]
        fa = f[active]
        go_left = x[fa] < vals[acur]
        cur[active] = np.where(go_left, lefts[acur], rights[acur])
        depths[active] += 1
        f = feats[cur]
        active = f >= 0
    return depths, forest._node_sizes[cur]


def anomaly_score(forest: IsolationForest, x) -> float:
    """Forest-average of leaf depth plus the leaf-size correction nu."""
    x = _check_example(x, forest.d)
    depths, leaf_sizes = descend_forest(forest, x)
    return float(np.mean(depths + forest._nu_table[leaf_sizes - 1]))


def normalized_anomaly_score(forest: IsolationForest, x) -> float:
    """Score mapped to (0, 1] as 2**(-a(x)/c(sample size)), for thresholding.

    Exposed separately from ``anomaly_score``; the two are not interchangeable.
    Degenerate single-point samples (c = 0) fall back to c = 1.
    """
    c = average_path_length(forest.trees[0].sample_size)
    if c <= 0.0:
        c = 1.0
    return float(2.0 ** (-anomaly_score(forest, x) / c))


def fit_tree(sample: Dataset, depth: int, depth_limit: int, rng: np.random.Generator) -> TreeNode:
    """Grow one tree over every row of ``sample``, starting at ``depth``.

    Returns a leaf when the sample has one row, the depth limit is reached,
    or no attribute has min < max; otherwise splits on an attribute drawn
    uniformly among the splittable ones, at a value drawn uniformly from the
    open interval between that attribute's min and max in the sample.
    """
    if depth < 0 or depth_limit < 0:
        raise ConfigurationError("depth and depth_limit must be >= 0")
    counts, offsets, arrays = _grow(
        sample.values, t=1, sample_size=sample.n, depth_limit=depth_limit, rng=rng, start_depth=depth
    )
    return _tree_from_slices(counts, offsets, arrays, 0, sample.n, sample.d).root


def fit_forest(data: Dataset, t: int, psi: int, seed: int) -> IsolationForest:
    """Fit t trees, each on an independent uniform subsample (no replacement)
    of size min(psi, n). Identical (data, t, psi, seed) give identical forests.
    """
    if t < 1:
        raise ConfigurationError(f"tree count must be >= 1, got {t}")
    if psi < 2:
        raise ConfigurationError(f"subsample size must be >= 2, got {psi}")
    if not isinstance(data, Dataset):
        data = Dataset(data)
    rng = np.random.default_rng(seed)
    sample_size = min(psi, data.n)
    depth_limit = math.ceil(math.log2(sample_size)) if sample_size > 1 else 0
    idx = np.empty((t, sample_size), dtype=np.int64)
    for i in range(t):
        idx[i] = rng.choice(data.n, size=sample_size, replace=False)
    stacked = data.values[idx.reshape(-1)]
    counts, offsets, arrays = _grow(
        stacked, t=t, sample_size=sample_size, depth_limit=depth_limit, rng=rng, start_depth=0
    )
    _check_grown(counts, offsets, arrays, sample_size, depth_limit)
    trees = [
        _tree_from_slices(counts, offsets, arrays, i, sample_size, data.d) for i in range(t)
    ]
    return IsolationForest(trees, psi=psi, d=data.d, rng_seed=seed)


def _grow(stacked, t, sample_size, depth_limit, rng, start_depth):
    """Level-synchronous growth of t trees over a stacked sample matrix.

    ``stacked`` holds the t subsamples back to back (t*sample_size rows).
    Every pending node across all trees forms one contiguous row group; a
    level is a fixed set of vectorized steps over all groups at once.
    Returns per-tree node counts, offsets, and concatenated node arrays
    (child indices tree-local, breadth-first).
    """
    d = stacked.shape[1]
    g_tree = np.arange(t, dtype=np.int64)
    g_node = np.zeros(t, dtype=np.int64)
    g_size = np.full(t, sample_size, dtype=np.int64)
    starts = np.arange(t, dtype=np.int64) * sample_size
    next_id = np.ones(t, dtype=np.int64)
    rows = stacked
    depth = start_depth

    rec_tree, rec_node, rec_feat, rec_val, rec_size, rec_depth, rec_left, rec_right = (
        [] for _ in range(8)
    )

    def record(tree, node, feat, val, size, dep, left, right):
        rec_tree.append(tree)
        rec_node.append(node)
        rec_feat.append(feat)
        rec_val.append(val)
        rec_size.append(size)
        rec_depth.append(np.full(len(tree), dep, dtype=np.int64))
        rec_left.append(left)
        rec_right.append(right)

    while g_tree.size:
        mins = np.minimum.reduceat(rows, starts, axis=0)
        maxs = np.maximum.reduceat(rows, starts, axis=0)
        splittable = mins < maxs
        can = splittable.any(axis=1) & (g_size > 1) & (depth < depth_limit)

        done = ~can
        if done.any():
            n_done = int(done.sum())
            record(
                g_tree[done],
                g_node[done],
                np.full(n_done, -1, dtype=np.int64),
                np.full(n_done, math.nan),
                g_size[done],
                depth,
                np.full(n_done, -1, dtype=np.int64),
                np.full(n_done, -1, dtype=np.int64),
            )
        if not can.any():
            break

        keep_rows = np.repeat(can, g_size)
        g_tree = g_tree[can]
        g_node = g_node[can]
        g_size = g_size[can]
        mins = mins[can]
        maxs = maxs[can]
        splittable = splittable[can]
        rows = rows[keep_rows]
        n_groups = g_tree.size
        starts = np.concatenate(([0], np.cumsum(g_size)[:-1]))

        # split attribute: uniform among splittable columns (argmax of masked uniforms)
        u = rng.random((n_groups, d))
        u[~splittable] = -1.0
        feat = u.argmax(axis=1)
        ar = np.arange(n_groups)
        vmin = mins[ar, feat]
        vmax = maxs[ar, feat]
        u = rng.random(n_groups)
        val = vmin * (1.0 - u) + vmax * u  # convex form cannot overflow
        # keep the threshold strictly above min and at most max so both
        # children stay non-empty even when rounding bites
        np.minimum(val, vmax, out=val)
        low = val <= vmin
        if low.any():
            val[low] = np.nextafter(vmin[low], vmax[low])

        # children get consecutive breadth-first ids within their tree
        run_first = np.flatnonzero(np.r_[True, g_tree[1:] != g_tree[:-1]])
        run_len = np.diff(np.r_[run_first, n_groups])
        ordinal = ar - np.repeat(run_first, run_len)
        left_id = next_id[g_tree] + 2 * ordinal
        right_id = left_id + 1
        np.add.at(next_id, g_tree, 2)

        record(g_tree, g_node, feat, val, g_size, depth, left_id, right_id)

        # route rows and regroup: per group, left block then right block
        grp_of_row = np.repeat(ar, g_size)
        col = rows[np.arange(rows.shape[0]), feat[grp_of_row]]
        go_right = col >= val[grp_of_row]
        key = 2 * grp_of_row + go_right
        rows = rows[np.argsort(key, kind="stable")]
        child_size = np.bincount(key, minlength=2 * n_groups)

        g_tree = np.repeat(g_tree, 2)
        g_node = np.empty(2 * n_groups, dtype=np.int64)
        g_node[0::2] = left_id
        g_node[1::2] = right_id
        g_size = child_size
        starts = np.concatenate(([0], np.cumsum(g_size)[:-1]))
        depth += 1

    counts = next_id
    offsets = np.concatenate(([0], np.cumsum(counts)[:-1]))
    total = int(counts.sum())
    feat = np.empty(total, dtype=np.int32)
    val = np.empty(total, dtype=np.float64)
    size = np.empty(total, dtype=np.int64)
    left = np.empty(total, dtype=np.int32)
    right = np.empty(total, dtype=np.int32)
    dep = np.empty(total, dtype=np.int32)
    pos = offsets[np.concatenate(rec_tree)] + np.concatenate(rec_node)
    feat[pos] = np.concatenate(rec_feat)
    val[pos] = np.concatenate(rec_val)
    size[pos] = np.concatenate(rec_size)
    left[pos] = np.concatenate(rec_left)
    right[pos] = np.concatenate(rec_right)
    dep[pos] = np.concatenate(rec_depth)
    for a in (feat, val, size, left, right, dep):
        a.setflags(write=False)
    return counts, offsets, (feat, val, size, left, right, dep)


def _tree_from_slices(counts, offsets, arrays, i, sample_size, n_features) -> IsolationTree:
    lo = int(offsets[i])
    hi = lo + int(counts[i])
    feat, val, size, left, right, dep = (a[lo:hi] for a in arrays)
    return IsolationTree(feat, val, size, left, right, dep, sample_size, n_features)


def _check_grown(counts, offsets, arrays, sample_size, depth_limit):
    """Structural invariants, checked on every trained forest."""
    feat, _val, size, left, right, dep = arrays
    internal = feat >= 0
    base = np.repeat(offsets, counts)
    left_abs = left[internal] + base[internal]
    right_abs = right[internal] + base[internal]
    if not (size[internal] == size[left_abs] + size[right_abs]).all():
        raise RuntimeError("grown tree violates size additivity")
    if internal.any() and (min(size[left_abs].min(), size[right_abs].min()) < 1):
        raise RuntimeError("grown tree has an empty child")
    if (dep[~internal] > depth_limit).any():
        raise RuntimeError("grown tree exceeds the depth limit")
    if not (size[offsets] == sample_size).all():
        raise RuntimeError("root size does not match the sample size")
