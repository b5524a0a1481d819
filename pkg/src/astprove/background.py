"""
astprove background worker pool

Simulation trials are split into fixed-size blocks and the blocks run on a shared
thread pool. Block results come back in submission order, so the outcome never
depends on how many workers there are or which finished first.

Usage:
    results = run_blocks(simulate_block, [(seed, 0, 4096), (seed, 1, 4096)])
"""

from __future__ import annotations

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Optional, Sequence

from .context import worker_count

logger = logging.getLogger(__name__)

# Shared executor pool (created once, reused across simulations)
_executors: dict[str, ThreadPoolExecutor] = {}
_executor_lock = threading.Lock()


def _get_executor(max_workers: int) -> ThreadPoolExecutor:
    """Get or create the shared simulation pool, sized to ``max_workers``."""
    key = f"thread-{max_workers}"
    with _executor_lock:
        pool = _executors.get(key)
        if pool is None or pool._shutdown:
            logger.debug(f"[astprove:background] Creating simulation pool with {max_workers} workers")
            pool = ThreadPoolExecutor(max_workers=max_workers, thread_name_prefix="astprove-sim")
            _executors[key] = pool
        return pool


def shutdown_executors() -> None:
    """Stop every pool created so far (used by tests and at CLI exit)."""
    with _executor_lock:
        for pool in _executors.values():
            pool.shutdown(wait=True)
        _executors.clear()


def run_blocks(
    fn: Callable[..., Any],
    block_args: Sequence[tuple],
    max_workers: Optional[int] = None,
) -> list[Any]:
    """Run ``fn(*args)`` for every entry of ``block_args``; results keep input order.

    A single block, or a single worker, runs inline on the calling thread.
    """
    workers = max_workers or worker_count()
    if workers <= 1 or len(block_args) <= 1:
        return [fn(*args) for args in block_args]

    pool = _get_executor(workers)
    futures = [pool.submit(fn, *args) for args in block_args]
    results = []
    for index, future in enumerate(futures):
        try:
            results.append(future.result())
        except Exception as exc:
            logger.error(f"[astprove:background] Block {index} failed: {exc}")
            for pending in futures[index + 1:]:
                pending.cancel()
            raise
    return results
