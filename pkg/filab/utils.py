"""Worker pools and seeded random streams"""

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar
import numpy as np


THREADS_ENV = "FI_LAB_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def worker_count(workers: int = None) -> int:
    """Resolve the number of worker threads.

    `workers` wins when given, otherwise FI_LAB_THREADS is read (unset means serial).
    0 means one worker per CPU.
    """
    if workers is None:
        raw = os.environ.get(THREADS_ENV, "1")
        try:
            workers = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got '{raw}'")
    if workers < 0:
        raise ValueError("worker count can't be negative")
    if workers == 0:
        workers = os.cpu_count() or 1
    return workers


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """Map `fn` over `items` keeping the input order"""
    items = list(items)
    workers = worker_count(workers)
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def derive_rng(seed: int, index: int) -> np.random.Generator:
    """Independent RNG stream for task `index` under `seed`"""
    return np.random.default_rng([seed, index])
