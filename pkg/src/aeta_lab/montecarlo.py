"""Trial blocking, seeding and parallel reduction for Monte-Carlo estimators.

Trials are cut into fixed-size blocks that depend only on the problem shape.
Block ``b`` draws from its own stream ``SeedSequence([master_seed, stream],
spawn_key=(b,))`` and results are concatenated in block order, so every
estimate is bit-reproducible for any number of workers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

BLOCK_ELEMENTS = 1 << 21
MAX_BLOCK = 1024
WORKERS_ENV = "AETA_LAB_WORKERS"


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: float
    trials: int

    def __post_init__(self):
        if self.std_error < 0 or self.trials < 1:
            raise ValueError("invalid estimate")

    @classmethod
    def from_samples(cls, samples) -> "Estimate":
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        se = float(samples.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(float(samples.mean()), se, n)

    def as_dict(self):
        return {"value": self.value, "std_error": self.std_error, "trials": self.trials}


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def block_size(cost_per_trial: int) -> int:
    return int(min(MAX_BLOCK, max(1, BLOCK_ELEMENTS // max(1, cost_per_trial))))


def block_rng(master_seed: int, block: int, stream: int = 0) -> np.random.Generator:
    seq = np.random.SeedSequence([master_seed, stream], spawn_key=(block,))
    return np.random.default_rng(seq)


def run_blocks(fn, trials: int, cost_per_trial: int, master_seed: int, workers=None,
               stream: int = 0):
    """Call ``fn(rng, count)`` once per block and return results in block order.

    ``stream`` separates independent estimators that share a master seed.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    size = block_size(cost_per_trial)
    counts = [min(size, trials - start) for start in range(0, trials, size)]
    jobs = [(block_rng(master_seed, b, stream), c) for b, c in enumerate(counts)]
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(jobs) == 1:
        return [fn(rng, c) for rng, c in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def concat(results, key):
    return np.concatenate([r[key] for r in results])
