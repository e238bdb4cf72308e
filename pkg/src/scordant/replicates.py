"""Replicate loops over seed-split random streams.

Replicate ``i`` of a run seeded with ``seed`` always draws from
``SeedSequence(seed, spawn_key=(i,))``, so results do not depend on the
number of worker threads or on execution order.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .logistic import replicate_rng

THREADS_ENV = "SCORDANT_THREADS"


def thread_count():
    """Worker cap from ``SCORDANT_THREADS`` (default 1)."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


def run_replicates(task, n_reps, seed, threads=None):
    """``[task(i, rng_i) for i in range(n_reps)]``, possibly in parallel."""
    threads = thread_count() if threads is None else int(threads)
    if threads <= 1 or n_reps <= 1:
        return [task(i, replicate_rng(seed, i)) for i in range(n_reps)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(task, i, replicate_rng(seed, i)) for i in range(n_reps)]
        return [f.result() for f in futures]


def mc_cushion(probability, n_draws):
    """Three binomial standard errors, with the bound itself as the variance proxy."""
    return 3.0 * float(np.sqrt(max(float(probability), 0.0) / n_draws))
