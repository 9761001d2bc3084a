"""Thread-pool helper honoring ``REGIME_SPLIT_THREADS``."""

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count(threads=None) -> int:
    if threads is None:
        env = os.environ.get("REGIME_SPLIT_THREADS", "")
        threads = int(env) if env.strip() else (os.cpu_count() or 1)
    return max(1, int(threads))


def parallel_map(fn, items, threads=None) -> list:
    """``[fn(x) for x in items]``, evaluated on a pool; output keeps input order."""
    items = list(items)
    n = thread_count(threads)
    if n == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
