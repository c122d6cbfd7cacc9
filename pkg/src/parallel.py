"""Worker-pool helper shared by the per-pair and per-vertex loops."""

import logging

from joblib import Parallel, delayed
from threadpoolctl import threadpool_limits

logger = logging.getLogger(__name__)


def parallel_map(func, items, n_jobs=1):
    """
    Apply ``func`` to every item on ``n_jobs`` threads, preserving order.

    BLAS is pinned to one thread for the duration so every item is computed
    with the same summation order whatever the worker count.

    Args:
        func (callable): Pure function of one item.
        items (iterable): Work items.
        n_jobs (int): Worker threads (1 runs inline).

    Returns:
        list: ``[func(item) for item in items]``.
    """
    items = list(items)
    with threadpool_limits(limits=1):
        if n_jobs == 1 or len(items) <= 1:
            return [func(item) for item in items]
        logger.debug(f"Dispatching {len(items)} work items to {n_jobs} threads")
        return Parallel(n_jobs=n_jobs, prefer="threads")(delayed(func)(item) for item in items)


def chunked(indices, n_chunks):
    """Split a sequence into at most ``n_chunks`` contiguous, non-empty pieces."""
    indices = list(indices)
    if not indices:
        return []
    n_chunks = max(1, min(int(n_chunks), len(indices)))
    size, extra = divmod(len(indices), n_chunks)
    out, start = [], 0
    for k in range(n_chunks):
        stop = start + size + (1 if k < extra else 0)
        out.append(indices[start:stop])
        start = stop
    return out
