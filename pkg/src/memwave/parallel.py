"""Thread-pool map for the chunked probe sweeps.

The heavy lifting inside each chunk is numpy matmul, which releases the
GIL, so plain threads scale fine and keep everything in one address space
(results are bitwise independent of the thread count: each chunk is an
isolated computation and the reduction order is fixed by the chunk list).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

__all__ = ["pmap"]


def pmap(fn, items, threads: int = 1) -> list:
    """Map fn over items, with ``threads`` worker threads when > 1."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
