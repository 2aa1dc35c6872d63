"""Deterministic parallel helpers.

Entries of a report are independent pure computations; the only requirement
is that assembly order (and therefore output bytes) never depends on the
worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor


def ordered_map(fn, items, threads: int = 1) -> list:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
