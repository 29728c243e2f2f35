"""Ordered thread-pool map capped by the LOCFPCA_THREADS environment variable."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "LOCFPCA_THREADS"


def thread_cap(default: int = 1) -> int:
    raw = os.environ.get(ENV_THREADS, "").strip()
    if not raw:
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{ENV_THREADS} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"{ENV_THREADS} must be a positive integer, got {raw!r}")
    return value


def ordered_map(fn, items, threads: int | None = None) -> list:
    """``[fn(x) for x in items]``, possibly computed concurrently, always in input order."""
    items = list(items)
    threads = thread_cap() if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
