"""Worker pool sizing and order-preserving parallel map.

Results must be independent of the worker count: only pure per-item
functions belong here, and outputs are returned in input order.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

__all__ = ["thread_count", "map_ordered"]


def thread_count(override: int | None = None) -> int:
    """Resolve the worker count: explicit override, else XAIKIT_THREADS, else 1."""
    if override is not None:
        value = int(override)
    else:
        raw = os.environ.get("XAIKIT_THREADS", "")
        if not raw.strip():
            return 1
        try:
            value = int(raw)
        except ValueError:
            raise ValueError(f"XAIKIT_THREADS is not an integer: {raw!r}") from None
    if value < 1:
        raise ValueError("thread count must be at least 1")
    return value


def map_ordered(fn, items, threads: int = 1) -> list:
    """Apply fn to every item, preserving input order in the result."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
