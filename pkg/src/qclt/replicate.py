"""Deterministic fan-out of Monte Carlo replications over worker processes.

Replication ``r`` always draws from ``derive_seed(master, r)``; workers get
contiguous index ranges and results are stitched back in index order, so the
output does not depend on the number of workers.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable

import numpy as np

DEFAULT_CHUNK = 2048


def _chunks(reps: int, chunk: int) -> list[tuple[int, int]]:
    return [(lo, min(reps, lo + chunk)) for lo in range(0, reps, chunk)]


def run_replications(kernel: Callable[..., np.ndarray], reps: int, seed: int,
                     args: tuple = (), workers: int = 1,
                     chunk: int = DEFAULT_CHUNK) -> np.ndarray:
    """Evaluate ``kernel(lo, hi, seed, *args)`` over [0, reps) and concatenate.

    ``kernel`` must be a module-level function returning one row per
    replication index in ``range(lo, hi)``.
    """
    spans = _chunks(reps, chunk)
    if workers <= 1 or len(spans) == 1:
        parts = [kernel(lo, hi, seed, *args) for lo, hi in spans]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(kernel, lo, hi, seed, *args) for lo, hi in spans]
            parts = [f.result() for f in futures]
    return np.concatenate(parts, axis=0)
