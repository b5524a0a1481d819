"""
astprove/simulator.py
=====================
Monte Carlo tail estimates for loops and for hand-specified processes.

Trials are grouped in blocks of ``BLOCK_SIZE``; block ``b`` draws from the
Philox stream ``(seed, b)`` and runs as one vectorized numpy computation. The
block partition does not depend on the worker count, so estimates are a pure
function of the inputs and the seed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np
import pandas as pd
from mpmath import mp, mpf
from scipy.stats import norm

from .background import run_blocks
from .context import precision_scope
from .dist import DiscreteDist, draw_from_table, make_rng, sample_batch, support, thresholds_from_cumulative
from .lang.normal_form import SingleWhileLoop

logger = logging.getLogger("astprove.simulator")

BLOCK_SIZE = 4096
MIN_TRIALS = 100


@dataclass(frozen=True)
class TailEstimate:
    k: int
    estimate: float
    wilson95: tuple[float, float]
    wilson99: tuple[float, float]
    trials: int
    seed: int
    successes: int


def wilson_interval(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion, clamped to ``[0, 1]``."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    z = float(norm.ppf(1 - (1 - level) / 2))
    phat = successes / trials
    denom = 1 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    lo = max(0.0, min(center - half, phat))
    hi = min(1.0, max(center + half, phat))
    return lo, hi


def _estimates(times: np.ndarray, ks: Sequence[int], trials: int, seed: int) -> list[TailEstimate]:
    out = []
    previous: Optional[tuple[int, int]] = None
    for k in ks:
        hits = int(np.count_nonzero(times >= k))
        if previous is not None and k >= previous[0] and hits > previous[1]:
            raise AssertionError(f"tail count increased from k={previous[0]} to k={k}")
        previous = (k, hits)
        out.append(TailEstimate(
            k=k,
            estimate=hits / trials,
            wilson95=wilson_interval(hits, trials, 0.95),
            wilson99=wilson_interval(hits, trials, 0.99),
            trials=trials,
            seed=seed,
            successes=hits,
        ))
    return out


def _blocks(trials: int) -> list[tuple[int, int]]:
    count = -(-trials // BLOCK_SIZE)
    return [(b, min(BLOCK_SIZE, trials - b * BLOCK_SIZE)) for b in range(count)]


def _check_request(ks: Sequence[int], trials: int) -> None:
    if trials < MIN_TRIALS:
        raise ValueError(f"at least {MIN_TRIALS} trials are required, got {trials}")
    if any(k < 1 for k in ks):
        raise ValueError("every k must be at least 1")


# ─────────────────────────────────────────────────────────────
# Loops
# ─────────────────────────────────────────────────────────────

def _loop_block(loop: SingleWhileLoop, pv0: tuple[int, ...], horizon: int,
                seed: int, block: int, size: int) -> np.ndarray:
    """Termination times of ``size`` paths; ``horizon + 1`` marks paths still running."""
    rng = make_rng(seed, block)
    times = np.full(size, horizon + 1, dtype=np.int64)
    index = np.arange(size)
    env = [np.full(size, v, dtype=np.int64) for v in pv0]
    for n in range(1, horizon + 1):
        inside = loop.holds_batch(env)
        if not inside.all():
            times[index[~inside]] = n
            index = index[inside]
            env = [column[inside] for column in env]
            if index.size == 0:
                break
        samples = [sample_batch(d, rng, index.size) for d in loop.sampling.dists]
        env = loop.update_batch(env, samples)
    return times


def simulate_times(loop: SingleWhileLoop, pv0: Sequence[int], horizon: int,
                   trials: int, seed: int, workers: Optional[int] = None) -> np.ndarray:
    pv0 = tuple(int(v) for v in pv0)
    args = [(loop, pv0, horizon, seed, b, size) for b, size in _blocks(trials)]
    return np.concatenate(run_blocks(_loop_block, args, workers))


def estimate_tail(loop: SingleWhileLoop, pv0: Sequence[int], ks: Sequence[int], trials: int,
                  seed: int, workers: Optional[int] = None) -> list[TailEstimate]:
    """Estimate ``P(T >= k)`` for every ``k`` in ``ks`` from one set of paths."""
    ks = list(ks)
    if not ks:
        return []
    _check_request(ks, trials)
    horizon = max(ks)
    times = simulate_times(loop, pv0, horizon, trials, seed, workers)
    logger.debug(f"[astprove:simulator] Loop #{loop.loop_id}: {trials} trials to horizon {horizon}")
    return _estimates(times, ks, trials, seed)


# ─────────────────────────────────────────────────────────────
# Abstract processes
# ─────────────────────────────────────────────────────────────

IncrementLaw = Sequence[tuple[Fraction, object]]


@dataclass(frozen=True)
class ProcessSpec:
    """Process ``X_0 = initial``, ``X_{n+1} = X_n + D_n`` with ``D_n ~ increment(n)``.

    ``increment(n)`` returns ``(value, probability)`` pairs; probabilities may be
    ``Fraction`` or mpmath numbers. Values must be multiples of ``1/scale``. The
    stopping time is the first ``n`` with ``X_n <= 0``.
    """

    initial: Fraction
    increment: Callable[[int], IncrementLaw]
    scale: int = 1
    name: str = "process"

    def scaled(self, value) -> int:
        scaled = Fraction(value) * self.scale
        if scaled.denominator != 1:
            raise ValueError(f"{self.name}: value {value} is not a multiple of 1/{self.scale}")
        return int(scaled)


def stationary_process(initial, dist: DiscreteDist, name: str = "walk") -> ProcessSpec:
    law = tuple((Fraction(v), p) for v, p in support(dist))
    return ProcessSpec(Fraction(initial), lambda n: law, scale=Fraction(initial).denominator, name=name)


def nonnegativity_counterexample() -> ProcessSpec:
    """Process from ``1/2`` that steps ``+1`` w.p. ``exp(-1/(n+1)^2)`` and ``-4(n+1)^2`` otherwise.

    It satisfies the supermartingale and minimal-vibration conditions but stays
    positive forever with probability ``exp(-pi^2/6)``.
    """
    def increment(n: int) -> IncrementLaw:
        j = n + 1
        up = mp.exp(-mpf(1) / (j * j))
        return ((Fraction(-4 * j * j), 1 - up), (Fraction(1), up))

    return ProcessSpec(Fraction(1, 2), increment, scale=2, name="nonnegativity-counterexample")


def _as_mpf(p):
    if isinstance(p, Fraction):
        return mpf(p.numerator) / p.denominator
    return mpf(p)


def _step_tables(spec: ProcessSpec, steps: int) -> list[tuple[np.ndarray, np.ndarray]]:
    tables = []
    with precision_scope():
        for n in range(steps):
            law = spec.increment(n)
            values = np.array([spec.scaled(v) for v, _ in law], dtype=np.int64)
            exact = all(isinstance(p, (Fraction, int)) for _, p in law)
            if exact:
                probs = [Fraction(p) for _, p in law]
            else:
                probs = [_as_mpf(p) for _, p in law]
            total = sum(probs)
            if (exact and total != 1) or (not exact and abs(total - 1) > mpf(10) ** (-(mp.dps - 5))):
                raise ValueError(f"{spec.name}: increment({n}) probabilities sum to {total}")
            cumulative = []
            running = Fraction(0) if exact else mpf(0)
            for p in probs[:-1]:
                running = running + p
                cumulative.append(running)
            tables.append((values, thresholds_from_cumulative(cumulative)))
    return tables


def _process_block(tables, x0: int, horizon: int, seed: int, block: int, size: int) -> np.ndarray:
    """Stopping indices ``Z`` capped at ``horizon`` (``Z >= k`` is exact for ``k <= horizon``)."""
    rng = make_rng(seed, block)
    stops = np.full(size, horizon, dtype=np.int64)
    index = np.arange(size)
    x = np.full(size, x0, dtype=np.int64)
    for n in range(horizon):
        stopped = x <= 0
        if stopped.any():
            stops[index[stopped]] = n
            index = index[~stopped]
            x = x[~stopped]
            if index.size == 0:
                break
        if n == horizon - 1:
            break
        values, thresholds = tables[n]
        x = x + draw_from_table(values, thresholds, rng, index.size)
    return stops


def estimate_process_tail(spec: ProcessSpec, ks: Sequence[int], trials: int, seed: int,
                          workers: Optional[int] = None) -> list[TailEstimate]:
    """Estimate ``P(Z >= k)`` where ``Z`` is the first ``n`` with ``X_n <= 0``."""
    ks = list(ks)
    if not ks:
        return []
    _check_request(ks, trials)
    horizon = max(ks)
    tables = _step_tables(spec, horizon)
    x0 = spec.scaled(spec.initial)
    args = [(tables, x0, horizon, seed, b, size) for b, size in _blocks(trials)]
    stops = np.concatenate(run_blocks(_process_block, args, workers))
    logger.debug(f"[astprove:simulator] {spec.name}: {trials} trials to horizon {horizon}")
    return _estimates(stops, ks, trials, seed)


def exact_nonstop_product(n: int):
    """``prod_{j=1..n} exp(-1/j^2)`` at the active precision (an mpmath number)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    with precision_scope():
        partial = mp.fsum(mpf(1) / (j * j) for j in range(1, n + 1))
        return mp.exp(-partial)


# ─────────────────────────────────────────────────────────────
# CSV projection
# ─────────────────────────────────────────────────────────────

def estimates_to_frame(estimates: Sequence[TailEstimate]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "k": e.k,
                "estimate": e.estimate,
                "wilson95_lo": e.wilson95[0],
                "wilson95_hi": e.wilson95[1],
                "trials": e.trials,
                "seed": e.seed,
            }
            for e in estimates
        ],
        columns=["k", "estimate", "wilson95_lo", "wilson95_hi", "trials", "seed"],
    )
