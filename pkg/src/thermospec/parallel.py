"""Ordered thread-pool map for independent grid sweeps."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
import os

THREADS_ENV = "THERMOSPEC_THREADS"


def thread_count(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def ordered_map(fn, items, workers: int | None = None) -> list:
    """``[fn(x) for x in items]``, possibly concurrent, always in input order."""
    items = list(items)
    n = thread_count(workers)
    if n == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
