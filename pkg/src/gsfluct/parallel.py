"""Order-preserving fan-out over fixed-size sample batches.

Batch boundaries depend only on the sample count and batch size, never on the
number of workers, so every batch is computed identically however it is scheduled.
"""

from concurrent.futures import ProcessPoolExecutor
import os

WORKERS_ENV = "GSFLUCT_WORKERS"


def resolve_workers(workers=None):
    if workers is None:
        workers = os.environ.get(WORKERS_ENV, 1)
    workers = int(workers)
    if workers < 1:
        raise ValueError(f"worker count must be positive, got {workers}")
    return workers


def batch_bounds(n_items, batch_size):
    return [(start, min(start + batch_size, n_items)) for start in range(0, n_items, batch_size)]


def map_batches(fn, n_items, batch_size, workers=1):
    """[fn(start, stop) for each batch], in batch order.  `fn` must be picklable."""
    bounds = batch_bounds(n_items, batch_size)
    if workers <= 1 or len(bounds) <= 1:
        return [fn(a, b) for a, b in bounds]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*bounds)))
