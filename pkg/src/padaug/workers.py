"""Optional utterance-level worker pool.

The PADAUG_THREADS environment variable caps the number of worker threads;
unset or 1 means serial execution. Work items must be independent (each
carries its own derived seed), so parallel and serial runs produce
identical results and output order always matches input order.
"""

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count() -> int:
    raw = os.environ.get("PADAUG_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def worker_map(fn, items):
    """Map fn over items, preserving order; threaded when configured."""
    items = list(items)
    n = worker_count()
    if n <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
