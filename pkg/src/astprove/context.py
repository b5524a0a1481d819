"""
astprove/context.py
===================
Run-wide settings carried in context variables, with environment defaults.

Environment
-----------
ASTPROVE_PRECISION  decimal digits for transcendental evaluation (default 30, min 20)
ASTPROVE_WORKERS    simulation worker threads (default 4)
ASTPROVE_STATE_CAP  exact DP cap on state-step pairs (default 10_000_000)
"""

from __future__ import annotations

import contextvars
import os
from contextlib import contextmanager
from typing import Iterator, Optional

from mpmath import mp

DEFAULT_PRECISION = 30
MIN_PRECISION = 20
DEFAULT_WORKERS = 4
DEFAULT_STATE_CAP = 10_000_000

precision_ctx: contextvars.ContextVar[Optional[int]] = contextvars.ContextVar("precision", default=None)
workers_ctx: contextvars.ContextVar[Optional[int]] = contextvars.ContextVar("workers", default=None)


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if not raw:
        return default
    try:
        return int(raw)
    except ValueError:
        return default


def precision_digits() -> int:
    digits = precision_ctx.get()
    if digits is None:
        digits = _env_int("ASTPROVE_PRECISION", DEFAULT_PRECISION)
    return max(digits, MIN_PRECISION)


def worker_count() -> int:
    workers = workers_ctx.get()
    if workers is None:
        workers = _env_int("ASTPROVE_WORKERS", DEFAULT_WORKERS)
    return max(workers, 1)


def state_cap() -> int:
    return _env_int("ASTPROVE_STATE_CAP", DEFAULT_STATE_CAP)


@contextmanager
def precision_scope(digits: Optional[int] = None) -> Iterator[int]:
    """Pin the precision for nested calls and set mpmath's working digits to match.

    With ``digits=None`` the currently active precision is re-applied, which is
    what library functions do before touching mpmath.
    """
    token = precision_ctx.set(digits) if digits is not None else None
    try:
        effective = precision_digits()
        with mp.workdps(effective):
            yield effective
    finally:
        if token is not None:
            precision_ctx.reset(token)


@contextmanager
def workers_scope(workers: Optional[int]) -> Iterator[int]:
    token = workers_ctx.set(workers) if workers is not None else None
    try:
        yield worker_count()
    finally:
        if token is not None:
            workers_ctx.reset(token)
