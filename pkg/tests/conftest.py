import math

import numpy as np
import pytest

from isoexplain import Dataset, Internal, IsolationForest, IsolationTree, Leaf


def balanced_node(lo: int, hi: int, depth: int):
    """Perfectly balanced tree over the integer points lo..hi-1 on feature 0."""
    size = hi - lo
    if size == 1:
        return Leaf(size=1, depth=depth)
    mid = (lo + hi) / 2.0
    return Internal(
        feature=0,
        value=mid,
        size=size,
        left=balanced_node(lo, (lo + hi) // 2, depth + 1),
        right=balanced_node((lo + hi) // 2, hi, depth + 1),
    )


def chain_node(depth_left: int, size: int, threshold: float, depth: int = 0):
    """A left-descending chain: points below threshold keep going left until a
    size-1 leaf at the requested depth; every right child is a leaf."""
    if depth_left == 0:
        return Leaf(size=size, depth=depth)
    return Internal(
        feature=0,
        value=threshold,
        size=size,
        left=chain_node(depth_left - 1, size // 2, threshold / 2.0, depth + 1),
        right=Leaf(size=size - size // 2, depth=depth + 1),
    )


def single_leaf_forest(d: int = 3, trees: int = 5, size: int = 1) -> IsolationForest:
    leaf = IsolationTree.from_node(Leaf(size=size, depth=0), n_features=d)
    return IsolationForest([leaf] * trees, psi=max(size, 2), d=d, rng_seed=0)


def oracle_explain_ours(forest, x):
    """Independent traversal over the nested node view."""
    w = np.zeros(forest.d)
    for tree in forest.trees:
        node = tree.root
        while isinstance(node, Internal):
            parent_size = node.size
            f = node.feature
            node = node.left if x[f] < node.value else node.right
            w[f] += math.log2(parent_size / node.size) - 1.0
    return w


def oracle_explain_diffi(forest, x):
    w = np.zeros(forest.d)
    for tree in forest.trees:
        node = tree.root
        path = []
        while isinstance(node, Internal):
            path.append(node.feature)
            node = node.left if x[node.feature] < node.value else node.right
        if path:
            weight = 1.0 / len(path) - 1.0 / math.log2(tree.sample_size)
            for f in path:
                w[f] += weight
    return w


@pytest.fixture
def balanced_tree_256():
    return IsolationTree.from_node(balanced_node(0, 256, 0), n_features=1)


@pytest.fixture
def small_gaussian_data():
    rng = np.random.default_rng(11)
    return Dataset(rng.normal(0.0, 1.0, (300, 4)))
