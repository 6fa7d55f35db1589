"""Seeded, splittable random streams.

Every stochastic computation draws from numpy's Philox4x32-10 counter-based
bit generator. A stream is identified by ``(seed, tag, replication)``: the
key material is ``SeedSequence(seed, spawn_key=(crc32(tag), replication))``,
so replication ``r`` of experiment ``tag`` always sees the same numbers no
matter how replications are scheduled across workers. Within a replication
the stream is consumed in round order by vectorized draws, which makes a
replication's trace a pure function of its key.
"""

from __future__ import annotations

import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")


def stream(seed: int, tag: str, replication: int = 0) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be a nonnegative integer")
    ss = np.random.SeedSequence(int(seed), spawn_key=(zlib.crc32(tag.encode()), int(replication)))
    return np.random.Generator(np.random.Philox(ss))


def n_workers() -> int:
    raw = os.environ.get("TRIALMECH_THREADS", "")
    try:
        cap = int(raw)
    except ValueError:
        cap = 0
    return max(1, cap) if raw else 1


def replicate(fn: Callable[[int, np.random.Generator], T], reps: int, seed: int, tag: str,
              chunk: int = 1) -> list[T]:
    """``[fn(r, stream(seed, tag, r)) for r in range(reps)]``, possibly threaded.

    Results come back in replication order whatever the worker count, so any
    reduction over them is deterministic.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    workers = n_workers()
    if workers == 1:
        return [fn(r, stream(seed, tag, r)) for r in range(reps)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda r: fn(r, stream(seed, tag, r)), range(reps), chunksize=chunk))


def batched(reps: int, size: int) -> Iterable[tuple[int, int]]:
    """Split ``range(reps)`` into consecutive ``(start, stop)`` blocks."""
    for start in range(0, reps, size):
        yield start, min(reps, start + size)


def inverse_cdf(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Index drawn from each row of ``probs`` by inverse CDF over the fixed column order."""
    cdf = np.cumsum(probs, axis=-1)
    cdf[..., -1] = np.inf  # absorb round-off so every u in [0, 1) maps to a column
    return (u[..., None] >= cdf).sum(axis=-1)


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if n <= 0:
        raise ValueError("need at least one trial")
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return float(max(0.0, centre - half)), float(min(1.0, centre + half))


def mean_ci(x: Sequence[float] | np.ndarray, z: float = 1.959963984540054) -> tuple[float, float]:
    """Sample mean and normal-approximation 95% half-width."""
    arr = np.asarray(x, dtype=float)
    if arr.size == 0:
        raise ValueError("need at least one observation")
    m = float(arr.mean())
    if arr.size == 1:
        return m, 0.0
    return m, float(z * arr.std(ddof=1) / np.sqrt(arr.size))
