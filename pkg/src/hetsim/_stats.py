from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, TypeVar

import numpy as np

T = TypeVar("T")

WORKERS_ENV = "HETSIM_MAX_WORKERS"


@dataclass(frozen=True)
class MonteCarloStats:
    """Sample mean and standard error of the mean.

    With a single sample the standard error is reported as 0 and
    ``degenerate`` is set.
    """

    mean: float
    standard_error: float
    n: int

    @classmethod
    def from_samples(cls, samples) -> "MonteCarloStats":
        x = np.asarray(samples, dtype=float).ravel()
        if x.size == 0:
            raise ValueError("no samples")
        se = float(x.std(ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0
        return cls(float(x.mean()), se, int(x.size))

    @property
    def degenerate(self) -> bool:
        return self.n < 2


def worker_cap() -> Optional[int]:
    value = os.environ.get(WORKERS_ENV)
    if not value:
        return None
    cap = int(value)
    if cap < 1:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {value!r}")
    return cap


def resolve_workers(requested: Optional[int]) -> int:
    """Requested worker count (``None`` = all CPUs), capped by the environment."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = worker_cap()
    if cap is not None:
        n = min(n, cap)
    return max(1, int(n))


def map_trials(fn: Callable[[int], T], trials: int,
               workers: Optional[int] = 1) -> List[T]:
    """Evaluate ``fn(t)`` for ``t = 0..trials-1``; results are in trial order.

    ``workers`` goes through :func:`resolve_workers`, so ``None`` means
    every CPU and the environment cap applies.
    """
    workers = resolve_workers(workers)
    if workers <= 1 or trials < 2:
        return [fn(t) for t in range(trials)]
    chunk = max(1, trials // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(trials), chunksize=chunk))
