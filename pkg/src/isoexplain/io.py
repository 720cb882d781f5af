"""Dataset CSV ingestion and forest persistence.

Models are stored as a single JSON document with a versioned header and
nested node records; split thresholds are written as hex floats so a
round-trip is bit-exact. Output files are written atomically (temp file in
the target directory, then rename).
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import (
    CsvParseError,
    CsvStructureError,
    ModelFormatError,
    ModelVersionError,
)
from .forest import Dataset, Internal, IsolationForest, IsolationTree, Leaf

MODEL_FORMAT = "isoexplain-forest"
MODEL_VERSION = 1


def format_number(x) -> str:
    """17 significant digits: enough for exact float64 round-trips."""
    return format(float(x), ".17g")


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_csv(path) -> Dataset:
    """Read a numeric CSV with an optional header row.

    The first row is taken as a header when any of its cells fails to parse
    as a number; otherwise columns are named f0..f(d-1). Errors carry 1-based
    file coordinates.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        raw: list[tuple[int, list[str]]] = []
        for row in reader:
            if not row or all(cell.strip() == "" for cell in row):
                continue
            raw.append((reader.line_num, [cell.strip() for cell in row]))
    if not raw:
        raise CsvStructureError(f"{path}: no rows")

    def parse_cell(cell: str) -> float | None:
        try:
            v = float(cell)
        except ValueError:
            return None
        return v

    first_line, first = raw[0]
    first_parsed = [parse_cell(c) for c in first]
    if any(v is None for v in first_parsed):
        column_names = first
        data_rows = raw[1:]
        if not data_rows:
            raise CsvStructureError(f"{path}: header but no data rows")
    else:
        column_names = None
        data_rows = raw

    width = len(first)
    values = np.empty((len(data_rows), width))
    for r, (line_num, row) in enumerate(data_rows):
        if len(row) != width:
            raise CsvStructureError(
                f"{path}: row {line_num} has {len(row)} columns, expected {width}"
            )
        for c, cell in enumerate(row):
            v = parse_cell(cell)
            if v is None:
                raise CsvParseError(f"{path}: cell {cell!r} is not a number", line_num, c + 1)
            if not math.isfinite(v):
                raise CsvParseError(f"{path}: cell {cell!r} is not finite", line_num, c + 1)
            values[r, c] = v
    return Dataset(values, column_names)


def write_csv(data: Dataset, path) -> None:
    lines = [",".join(data.column_names)]
    for row in data.values:
        lines.append(",".join(format_number(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def _node_doc(tree: IsolationTree, i: int) -> dict:
    # children carry larger ids than their parent, so one reverse pass suffices
    docs: list[dict | None] = [None] * tree.node_count
    for j in range(tree.node_count - 1, i - 1, -1):
        if tree.features[j] < 0:
            docs[j] = {
                "kind": "leaf",
                "size": int(tree.sizes[j]),
                "depth": int(tree.depths[j]),
            }
        else:
            docs[j] = {
                "kind": "internal",
                "feature": int(tree.features[j]),
                "value": float(tree.values[j]).hex(),
                "size": int(tree.sizes[j]),
                "left": docs[tree.lefts[j]],
                "right": docs[tree.rights[j]],
            }
    return docs[i]


def save_model(forest: IsolationForest, path) -> None:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "psi": forest.psi,
        "d": forest.d,
        "seed": forest.rng_seed,
        "trees": [
            {"sample_size": tree.sample_size, "root": _node_doc(tree, 0)}
            for tree in forest.trees
        ],
    }
    atomic_write_text(path, json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")


def _node_from_doc(doc) -> Internal | Leaf:
    # iterative two-phase walk: collect, then assemble children-first
    order: list[dict] = []
    stack = [doc]
    while stack:
        node = stack.pop()
        if not isinstance(node, dict) or "kind" not in node:
            raise ModelFormatError(f"malformed node record: {node!r}")
        order.append(node)
        if node["kind"] == "internal":
            stack.append(node["left"])
            stack.append(node["right"])
        elif node["kind"] != "leaf":
            raise ModelFormatError(f"unknown node kind {node['kind']!r}")
    built: dict[int, Internal | Leaf] = {}
    try:
        for node in reversed(order):
            if node["kind"] == "leaf":
                built[id(node)] = Leaf(size=int(node["size"]), depth=int(node["depth"]))
            else:
                built[id(node)] = Internal(
                    feature=int(node["feature"]),
                    value=float.fromhex(node["value"]),
                    size=int(node["size"]),
                    left=built[id(node["left"])],
                    right=built[id(node["right"])],
                )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed node record: {exc}") from exc
    return built[id(doc)]


def load_model(path) -> IsolationForest:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc}") from exc
    if not text.strip():
        raise ModelFormatError(f"{path}: empty model file")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not a valid model document: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"{path}: not a {MODEL_FORMAT} document")
    if doc.get("version") != MODEL_VERSION:
        raise ModelVersionError(
            f"{path}: format version {doc.get('version')!r} not supported "
            f"(this build reads version {MODEL_VERSION})"
        )
    try:
        d = int(doc["d"])
        psi = int(doc["psi"])
        seed = int(doc["seed"])
        tree_docs = doc["trees"]
        trees = []
        for td in tree_docs:
            root = _node_from_doc(td["root"])
            tree = IsolationTree.from_node(root, n_features=d)
            if tree.sample_size != int(td["sample_size"]):
                raise ModelFormatError(
                    f"{path}: tree root size {tree.sample_size} != recorded "
                    f"sample_size {td['sample_size']}"
                )
            trees.append(tree)
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: malformed model document: {exc}") from exc
    return IsolationForest(trees, psi=psi, d=d, rng_seed=seed)
