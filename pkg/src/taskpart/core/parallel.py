"""Worker-count resolution and an order-preserving parallel map."""

import logging
import os
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from typing import TypeVar

log = logging.getLogger(__name__)

THREADS_ENV = "TASKPART_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def resolve_workers(explicit: int | None = None) -> int:
    """``explicit`` if positive, else ``$TASKPART_THREADS``; 0 or unset means all CPUs."""
    if explicit is not None and explicit > 0:
        return explicit
    raw = os.environ.get(THREADS_ENV, "").strip()
    try:
        requested = int(raw) if raw else 0
    except ValueError:
        log.warning(f"Ignoring non-integer {THREADS_ENV}={raw!r}")
        requested = 0
    if requested > 0:
        return requested
    return os.cpu_count() or 1


def ordered_map(fn: Callable[[T], R], items: Sequence[T], workers: int = 1) -> list[R]:
    """``[fn(x) for x in items]``, fanned out over processes when ``workers > 1``.

    ``fn`` must be a module-level function and results come back in input order.
    """
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
