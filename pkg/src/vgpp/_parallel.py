"""Deterministic batch execution for Monte Carlo work.

Work is split into a fixed batch layout that depends only on the problem
size, never on the worker count; batch ``i`` always draws from
``rng.substream(i)`` and results are concatenated in batch order.  The
``VGPP_THREADS`` environment variable therefore changes wall-clock time
only, never a single output number.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from .distributions import RngStream

_DEFAULT_BATCH = 250_000


def worker_count() -> int:
    raw = os.environ.get("VGPP_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def batch_sizes(n: int, batch: int = _DEFAULT_BATCH) -> list[int]:
    sizes = [batch] * (n // batch)
    if n % batch:
        sizes.append(n % batch)
    return sizes or [0]


def map_batches(fn: Callable[[RngStream, int], np.ndarray], n: int,
                rng: RngStream, batch: int = _DEFAULT_BATCH) -> np.ndarray:
    """Evaluate ``fn(substream, size)`` over the fixed batch layout of ``n`` draws."""
    sizes = batch_sizes(n, batch)
    streams = [rng.substream(i) for i in range(len(sizes))]
    workers = worker_count()
    if workers == 1 or len(sizes) == 1:
        parts = [fn(s, m) for s, m in zip(streams, sizes)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(fn, streams, sizes))
    return np.concatenate(parts)
