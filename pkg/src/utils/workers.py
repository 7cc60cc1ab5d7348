from __future__ import annotations

import logging
import os
from multiprocessing import Pool, cpu_count
from typing import Callable, Iterable, TypeVar

from src.solver.errors import ConfigurationError

logger = logging.getLogger("radial_curvature")

T = TypeVar("T")
R = TypeVar("R")


def resolve_workers(requested: int | None = None) -> int:
    """Worker count: explicit value, else RADIAL_WORKERS, else 1. 0 means all cores."""
    if requested is None:
        requested = int(os.getenv("RADIAL_WORKERS", "1").strip() or 1)
    if requested < 0:
        raise ConfigurationError(f"workers must be >= 0, got {requested}")
    return cpu_count() if requested == 0 else requested


def parallel_map(func: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    """Map ``func`` over ``items`` keeping input order; a process pool when workers > 1."""
    items = list(items)
    workers = min(resolve_workers(workers), max(len(items), 1))
    if workers <= 1:
        return [func(item) for item in items]

    logger.debug("[Workers] %d tasks on %d processes", len(items), workers)
    with Pool(processes=workers) as pool:
        return pool.map(func, items, chunksize=1)
