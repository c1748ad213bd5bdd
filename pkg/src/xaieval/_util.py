"""Small shared helpers used across metric modules."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def fsum_mean(values: Sequence[float]) -> float:
    """Mean via math.fsum; insensitive to summation order for our sizes."""
    if not values:
        raise ValueError("mean of empty sequence")
    return math.fsum(values) / len(values)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], parallelism: int) -> list[R]:
    """Map fn over items, preserving input order regardless of parallelism."""
    items = list(items)
    if parallelism <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(fn, items))
