"""
astprove/semantics.py
=====================
Markov-chain semantics of a single while loop.

A configuration is a location (``in`` or ``out``) with a valuation. From
``(in, pv)`` the chain moves to ``(in, F(pv, rv))`` when the guard holds and to
``(out, pv)`` otherwise; ``out`` is absorbing. The termination time ``T`` is the
first step index at which the location is ``out``, so a loop whose guard fails
initially has ``T = 1``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .context import state_cap
from .dist import Interval, joint_support, make_rng, sample_batch
from .errors import InfiniteSupport, StateExplosion
from .lang.normal_form import SingleWhileLoop

logger = logging.getLogger("astprove.semantics")


class Location(str, Enum):
    IN = "in"
    OUT = "out"


@dataclass(frozen=True)
class Configuration:
    loc: Location
    valuation: tuple[int, ...]


@dataclass(frozen=True)
class PathResult:
    terminated: bool
    steps: int
    valuation: tuple[int, ...]


@dataclass(frozen=True)
class KernelRow:
    successors: tuple[tuple[Configuration, Fraction], ...]

    @property
    def total(self) -> Fraction:
        return sum((p for _, p in self.successors), Fraction(0))


def step(loop: SingleWhileLoop, cfg: Configuration, rv: Sequence[int]) -> Configuration:
    if cfg.loc is Location.OUT:
        return cfg
    if loop.holds(cfg.valuation):
        return Configuration(Location.IN, loop.update(cfg.valuation, tuple(rv)))
    return Configuration(Location.OUT, cfg.valuation)


def kernel_row(loop: SingleWhileLoop, cfg: Configuration) -> KernelRow:
    """Successor distribution of ``cfg`` (finite support only)."""
    if cfg.loc is Location.OUT or not loop.holds(cfg.valuation):
        return KernelRow(((step(loop, cfg, ()), Fraction(1)),))
    merged: dict[Configuration, Fraction] = {}
    for rv, prob in joint_support(loop.sampling):
        succ = step(loop, cfg, rv)
        merged[succ] = merged.get(succ, Fraction(0)) + prob
    return KernelRow(tuple(merged.items()))


class _SampleStream:
    """Draws sample vectors in chunks from one generator."""

    def __init__(self, loop: SingleWhileLoop, rng: np.random.Generator, chunk: int = 1024):
        self.dists = loop.sampling.dists
        self.rng = rng
        self.chunk = chunk
        self._buffer: list[tuple[int, ...]] = []

    def draw(self) -> tuple[int, ...]:
        if not self.dists:
            return ()
        if not self._buffer:
            columns = [sample_batch(d, self.rng, self.chunk) for d in self.dists]
            self._buffer = [tuple(int(v) for v in row) for row in zip(*columns)]
            self._buffer.reverse()
        return self._buffer.pop()


def run(loop: SingleWhileLoop, pv0: Sequence[int], seed: int, horizon: int) -> PathResult:
    """Execute one path for at most ``horizon`` steps."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    stream = _SampleStream(loop, make_rng(seed))
    cfg = Configuration(Location.IN, tuple(pv0))
    for n in range(1, horizon + 1):
        rv = stream.draw() if loop.holds(cfg.valuation) else ()
        cfg = step(loop, cfg, rv)
        if cfg.loc is Location.OUT:
            return PathResult(True, n, cfg.valuation)
    return PathResult(False, horizon, cfg.valuation)


# ─────────────────────────────────────────────────────────────
# Exact tail oracle
# ─────────────────────────────────────────────────────────────

def _advance(loop: SingleWhileLoop, inside: dict[tuple[int, ...], Fraction],
             support) -> dict[tuple[int, ...], Fraction]:
    """One step of the in-mass: guard-false valuations leave, the rest move by F."""
    nxt: dict[tuple[int, ...], Fraction] = {}
    for pv, mass in inside.items():
        if not loop.holds(pv):
            continue
        for rv, prob in support:
            succ = loop.update(pv, rv)
            nxt[succ] = nxt.get(succ, Fraction(0)) + mass * prob
    return nxt


def exact_tail(loop: SingleWhileLoop, pv0: Sequence[int], k_max: int,
               cap: Optional[int] = None) -> list[Fraction]:
    """``[P(T >= 1), ..., P(T >= k_max)]`` as exact rationals.

    ``P(T >= k)`` is the mass still at location ``in`` after ``k - 1`` steps.

    Raises
    ------
    InfiniteSupport
        A sampling variable has infinite support.
    StateExplosion
        More than ``cap`` state-step pairs were visited.
    """
    if not loop.sampling.is_finite:
        raise InfiniteSupport("exact_tail needs finite-support sampling variables")
    cap = cap or state_cap()
    support = joint_support(loop.sampling)
    inside = {tuple(pv0): Fraction(1)}
    tails: list[Fraction] = []
    visited = 0
    for k in range(1, k_max + 1):
        if k > 1:
            inside = _advance(loop, inside, support)
        visited += len(inside)
        if visited > cap:
            raise StateExplosion(cap, visited)
        tails.append(sum(inside.values(), Fraction(0)))
    logger.debug(f"[astprove:semantics] Exact DP visited {visited} state-step pairs up to k={k_max}")
    return tails


def approximate_tail(loop: SingleWhileLoop, pv0: Sequence[int], k_max: int,
                     prune_below: Fraction = Fraction(1, 2 ** 64),
                     cap: Optional[int] = None) -> list[Interval]:
    """Lossy DP: valuations lighter than ``prune_below`` are dropped.

    Each ``P(T >= k)`` is returned as ``[kept mass, kept mass + dropped so far]``.
    """
    if not loop.sampling.is_finite:
        raise InfiniteSupport("approximate_tail needs finite-support sampling variables")
    cap = cap or state_cap()
    support = joint_support(loop.sampling)
    inside = {tuple(pv0): Fraction(1)}
    dropped = Fraction(0)
    out: list[Interval] = []
    visited = 0
    for k in range(1, k_max + 1):
        if k > 1:
            inside = _advance(loop, inside, support)
            light = [pv for pv, mass in inside.items() if mass < prune_below]
            for pv in light:
                dropped += inside.pop(pv)
        visited += len(inside)
        if visited > cap:
            raise StateExplosion(cap, visited)
        kept = sum(inside.values(), Fraction(0))
        out.append(Interval(kept, min(kept + dropped, Fraction(1))))
    if dropped:
        logger.warning(f"[astprove:semantics] Pruned DP dropped mass {float(dropped):.3g}")
    return out
