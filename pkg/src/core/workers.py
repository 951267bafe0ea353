# src/core/workers.py
import asyncio
import logging
from typing import Callable, Iterable, TypeVar

from core.settings import get_settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def resolve_workers(requested: int | None = None) -> int:
    """CLI/config value first, then SKAM_WORKERS."""
    workers = requested if requested is not None else get_settings().workers
    if workers < 1:
        raise ValueError(f"Worker count must be positive, got {workers}")
    return workers


async def map_bounded(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> list[R]:
    """
    Run fn over items in threads, at most `workers` at a time.

    Results come back in submission order whatever the completion order.
    """
    semaphore = asyncio.Semaphore(workers)

    async def run_one(item: T) -> R:
        async with semaphore:
            return await asyncio.to_thread(fn, item)

    items = list(items)
    logger.debug("dispatching %d tasks to %d workers", len(items), workers)
    return list(await asyncio.gather(*(run_one(item) for item in items)))
