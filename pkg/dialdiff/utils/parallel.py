import logging
import os
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor

import torch

from dialdiff.utils.constants import DIALDIFF_THREADS_ENVVAR
from dialdiff.utils.exceptions import AppConfigException

_LOGGER = logging.getLogger(__name__)


def get_worker_count() -> int:
    """Returns the worker cap from `DIALDIFF_THREADS`, falling back to the CPU count."""
    raw = os.getenv(DIALDIFF_THREADS_ENVVAR)
    if raw is None or raw.strip() == "":
        return max(1, os.cpu_count() or 1)
    try:
        value = int(raw)
    except ValueError as ve:
        raise AppConfigException(f"{DIALDIFF_THREADS_ENVVAR} must be a positive integer. Got: {raw!r}") from ve
    if value < 1:
        raise AppConfigException(f"{DIALDIFF_THREADS_ENVVAR} must be a positive integer. Got: {value}")
    return value


def apply_thread_cap() -> int:
    """Caps torch's intra-op thread pool at the configured worker count and returns that count."""
    workers = get_worker_count()
    torch.set_num_threads(workers)
    _LOGGER.debug(f"torch intra-op threads capped at {workers}")
    return workers


def parallel_map[T, R](fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """
    Order-preserving map over pure per-item work. Runs inline with a single worker so results (and any raised error)
    are identical to a sequential loop.
    """
    items = list(items)
    workers = min(get_worker_count(), max(1, len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
