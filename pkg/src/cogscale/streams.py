"""Reproducible random streams and order-independent fan-out.

Every trial gets its own Philox generator keyed by ``(master_seed, index)``
so results never depend on which worker ran which trial, or in what order.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

MASK64 = (1 << 64) - 1


def substream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) & MASK64, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        raise ValueError("an explicit seed or Generator is required")
    return substream(int(rng))


def pmap(func: Callable[[T], R], items: Sequence[T] | Iterable[T], workers: int = 1) -> list[R]:
    """``list(map(func, items))``, optionally across processes; order preserved."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items, chunksize=chunk))
