"""Deterministic fan-out and per-trial seed derivation."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

THREADS_ENV = "WIRETAP_LAB_THREADS"


def worker_count(requested: int = 1) -> int:
    """Requested workers, capped by ``WIRETAP_LAB_THREADS`` when set."""
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, min(requested, int(env)))
        except ValueError:
            pass
    return max(1, requested)


def ordered_map(fn, items, workers: int = 1) -> list:
    """Map preserving input order; threads only change wall time, never results."""
    workers = worker_count(workers)
    items = list(items)
    if workers == 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def trial_seed(master: int, index: int) -> int:
    """64-bit seed of trial ``index``: counter-based split of the master seed.

    ``SeedSequence([master, index])`` hashes the pair, so trial seeds do not
    depend on how many trials run or in which order they execute.
    """
    state = np.random.SeedSequence([int(master), int(index)]).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 32) | int(state[1])
