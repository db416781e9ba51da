"""Deterministic map-reduce over sample indices.

Work is cut into fixed-size chunks of consecutive indices.  Chunks may run
on any number of threads; results are reassembled in index order and
reduced with exactly rounded summation, so the output never depends on the
worker count or scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

CHUNK = 4096
LN2 = math.log(2.0)


def map_indices(fn: Callable[[np.ndarray], np.ndarray], n: int, workers: int = 1,
                chunk: int = CHUNK) -> np.ndarray:
    """Evaluate ``fn`` on index chunks covering ``range(n)``; concatenate on axis 0."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    starts = range(0, n, chunk)
    jobs = [np.arange(s, min(s + chunk, n), dtype=np.int64) for s in starts]
    if workers <= 1 or len(jobs) <= 1:
        parts = [fn(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(fn, jobs))
    if not parts:
        return np.zeros(0)
    return np.concatenate(parts, axis=0)


def mean_stderr(values) -> tuple[float, float]:
    """Sample mean and standard error (``ddof=1``) with exact summation."""
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    n = v.size
    if n < 2:
        raise ValueError("need at least two values")
    mean = math.fsum(v) / n
    var = math.fsum((v - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)
