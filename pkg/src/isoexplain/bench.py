"""Wall-clock timing of explanation inference.

Measures seconds per explained example, method by method, on examples
anomalized at each requested fraction. Training time is never part of the
measurement; one warm-up sweep per (method, fraction) is discarded and the
median over the remaining repeats is reported.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from statistics import median

import numpy as np

from .errors import ConfigurationError
from .explain import (
    METHOD_DIFFI,
    METHOD_OURS,
    METHOD_RANDOM,
    explain_diffi_local,
    explain_ours,
    explain_random,
)
from .forest import Dataset, IsolationForest
from .synthbench import anomalize


@dataclass(frozen=True)
class TimingRecord:
    method: str
    dataset_id: str
    m_fraction: float
    seconds_per_example: float


def bench_explain(
    forest: IsolationForest,
    data: Dataset,
    methods,
    m_grid,
    repeats: int,
    dataset_id: str = "data",
    seed: int = 0,
) -> list[TimingRecord]:
    if repeats < 3:
        raise ConfigurationError(f"need at least 3 repeats, got {repeats}")
    methods = list(dict.fromkeys(methods))
    m_grid = [float(m) for m in m_grid]
    if not methods or not m_grid:
        raise ConfigurationError("need at least one method and one m value")
    rng = np.random.default_rng(seed)

    records = []
    for m in m_grid:
        k = max(1, int(math.floor(m * data.d + 0.5)))
        examples = [
            anomalize(data, i, rng.choice(data.d, size=k, replace=False), 3.0)
            for i in range(data.n)
        ]
        for tag in methods:
            if tag == METHOD_OURS:
                run = lambda: [explain_ours(forest, x) for x in examples]
            elif tag == METHOD_DIFFI:
                run = lambda: [explain_diffi_local(forest, x) for x in examples]
            elif tag == METHOD_RANDOM:
                run = lambda: [explain_random(data.d, rng) for _ in examples]
            else:
                raise ConfigurationError(f"unknown method tag {tag!r}")
            run()  # warm-up, discarded
            times = []
            for _ in range(repeats):
                t0 = time.perf_counter()
                run()
                times.append((time.perf_counter() - t0) / len(examples))
            records.append(
                TimingRecord(
                    method=tag,
                    dataset_id=dataset_id,
                    m_fraction=m,
                    seconds_per_example=median(times),
                )
            )
    return records
