import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "COHBUDGET_THREADS"


def thread_count() -> int:
    """Worker cap from ``COHBUDGET_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get(ENV_THREADS, "0").strip() or "0"
    n = int(raw)
    if n < 0:
        raise ValueError(f"{ENV_THREADS} must be >= 0, got {n}")
    return n or (os.cpu_count() or 1)


def ordered_map(func, items):
    """``list(map(func, items))``, optionally threaded; output order follows input order."""
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(func, items))
