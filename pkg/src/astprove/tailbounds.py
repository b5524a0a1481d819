"""
astprove/tailbounds.py
======================
Explicit upper bounds on ``P(T >= k)`` from a supermartingale map.

Two families:

- difference-bounded maps (``|g| <= c``) give
  ``(1 - exp(-t E)) / (1 - (1 + delta^2 t^2 / 4)^(-k))`` with
  ``t = min(1/sqrt(k), t_max)``, which is ``O(1/sqrt(k))``;
- general maps give ``C/sqrt(k) + E / (c^2 k)^(1/6)``, which is ``O(k^(-1/6))``
  once ``k`` is past a computed validity threshold.

``E`` is ``h(in, pv0)``. Transcendental terms are evaluated with mpmath at the
precision of :func:`astprove.context.precision_scope` and every reported bound
is rounded up to 15 significant digits.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from decimal import ROUND_CEILING, Context, Decimal
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence

import pandas as pd
from cachetools import LRUCache, cached
from mpmath import mp, mpf

from .context import precision_scope
from .errors import TViolatesSmallness

logger = logging.getLogger("astprove.tailbounds")

_ROUNDING = Context(prec=15, rounding=ROUND_CEILING)
_BISECTION_STEPS = 200


class BoundKind(str, Enum):
    DIFF_BOUNDED = "diff_bounded"
    GENERAL = "general"


@dataclass(frozen=True)
class BoundInput:
    e_x0: Fraction
    delta: Fraction
    c_diff: Optional[Fraction] = None
    kind: BoundKind = BoundKind.DIFF_BOUNDED

    def __post_init__(self):
        object.__setattr__(self, "e_x0", Fraction(self.e_x0))
        object.__setattr__(self, "delta", Fraction(self.delta))
        object.__setattr__(self, "kind", BoundKind(self.kind))
        if self.c_diff is not None:
            object.__setattr__(self, "c_diff", Fraction(self.c_diff))
            if self.c_diff <= 0:
                raise ValueError(f"difference bound must be positive, got {self.c_diff}")
        if self.e_x0 <= 0:
            raise ValueError(f"E(X0) must be positive, got {self.e_x0}")
        if self.delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.kind is BoundKind.DIFF_BOUNDED and self.c_diff is None:
            raise ValueError("a difference-bounded input needs c_diff")


@dataclass(frozen=True)
class GeneralConstants:
    c: float
    C: float
    N: int


@dataclass(frozen=True)
class BoundResult:
    k: int
    bound: float
    t: Optional[float]
    valid: bool
    method: str
    constants: dict = field(default_factory=dict)


def _mpf(value) -> mpf:
    value = Fraction(value)
    return mpf(value.numerator) / value.denominator


def round_up(value) -> float:
    """Smallest float at least ``value`` after rounding up to 15 digits, capped at 1."""
    exact = Decimal(mp.nstr(value, mp.dps, strip_zeros=False))
    rounded = _ROUNDING.plus(exact)
    out = float(rounded)
    if Decimal(out) < rounded:
        out = math.nextafter(out, math.inf)
    return min(out, 1.0)


def _bisect_last(predicate, lo, hi):
    """Largest point (to working precision) of ``[lo, hi]`` where a monotone predicate holds.

    ``predicate(lo)`` must hold and ``predicate(hi)`` must fail; the returned
    value is the lower end of the final bracket, so the predicate holds there.
    """
    tolerance = mpf(10) ** -12
    for _ in range(_BISECTION_STEPS):
        if hi - lo <= tolerance * hi:
            break
        mid = (lo + hi) / 2
        if predicate(mid):
            lo = mid
        else:
            hi = mid
    return lo


# ─────────────────────────────────────────────────────────────
# Difference-bounded maps
# ─────────────────────────────────────────────────────────────

def smallness_gap(t, delta, c_diff) -> mpf:
    """``exp(c t) - (1 + c t + c^2 t^2 / 2) - (delta^2 / 4) t^2``; admissible ``t`` give ``<= 0``."""
    t, delta, c = mpf(t), _mpf(delta), _mpf(c_diff)
    ct = c * t
    return mp.exp(ct) - (1 + ct + ct * ct / 2) - delta * delta * t * t / 4


@cached(LRUCache(maxsize=128), key=lambda delta, c_diff: (Fraction(delta), Fraction(c_diff), mp.dps))
def t_max(delta, c_diff) -> mpf:
    """Largest ``t`` satisfying the smallness condition, found by bisection."""
    delta, c = _mpf(delta), _mpf(c_diff)

    def admissible(t):
        # (exp(ct) - 1 - ct - (ct)^2/2) / t^2 is increasing in t
        ct = c * t
        return (mp.exp(ct) - 1 - ct - ct * ct / 2) / (t * t) <= delta * delta / 4

    lo = mpf(1) / (1024 * c)
    hi = mpf(1) / c
    while admissible(hi):
        lo, hi = hi, hi * 2
    while not admissible(lo):
        lo = lo / 2
    return _bisect_last(admissible, lo, hi)


def bound_diff(inp: BoundInput, k: int, t=None) -> BoundResult:
    """Tail bound for a difference-bounded supermartingale map at ``k``.

    Raises
    ------
    TViolatesSmallness
        An explicit ``t`` fails the smallness condition.
    """
    if inp.c_diff is None:
        raise ValueError("bound_diff needs a difference bound")
    if k < 1:
        raise ValueError("k must be at least 1")
    with precision_scope():
        limit = t_max(inp.delta, inp.c_diff)
        if t is None:
            t = min(1 / mp.sqrt(k), limit)
        else:
            t = _mpf(t) if isinstance(t, (int, Fraction)) else mpf(t)
            if t <= 0 or smallness_gap(t, inp.delta, inp.c_diff) > 0:
                raise TViolatesSmallness(float(t), float(limit))
        e_x0, delta = _mpf(inp.e_x0), _mpf(inp.delta)
        numerator = -mp.expm1(-t * e_x0)
        denominator = 1 - mp.power(1 + delta * delta * t * t / 4, -k)
        bound = round_up(numerator / denominator)
        return BoundResult(k, bound, float(t), True, BoundKind.DIFF_BOUNDED.value)


# ─────────────────────────────────────────────────────────────
# General maps
# ─────────────────────────────────────────────────────────────

def _search_n(a) -> int:
    """Smallest ``k >= 1`` with ``1 - (1 + a/k)^(-k) >= (1 - exp(-a)) / 2``.

    The other requirement on N, ``(1 - exp(-u)) / u <= 3/2``, holds for every
    ``u > 0`` because ``1 - exp(-u) < u``, so this condition alone fixes N.
    The left side increases in ``k``, so exponential search then binary search.
    """
    target = -mp.expm1(-a) / 2

    def ok(k: int) -> bool:
        return 1 - mp.power(1 + a / k, -k) >= target

    if ok(1):
        return 1
    lo, hi = 1, 2
    while not ok(hi):
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


@cached(LRUCache(maxsize=128), key=lambda e_x0, delta: (Fraction(e_x0), Fraction(delta), mp.dps))
def _general_constants(e_x0, delta) -> tuple[mpf, mpf, int]:
    e_x0, delta = _mpf(e_x0), _mpf(delta)
    target = delta * delta / 16

    def admissible(c):
        return (mp.exp(c) - 1 - c - c * c / 2) / (c * c) <= target

    one = mpf(1)
    if admissible(one):
        c = one - mpf(10) ** -12
    else:
        c = _bisect_last(admissible, mpf(10) ** -6, one)
    big_c = 3 * e_x0 / -mp.expm1(-target)
    n = _search_n(target)
    return c, big_c, n


def general_constants(inp: BoundInput) -> GeneralConstants:
    with precision_scope():
        c, big_c, n = _general_constants(inp.e_x0, inp.delta)
        return GeneralConstants(float(c), float(big_c), n)


def bound_general(inp: BoundInput, k: int) -> BoundResult:
    """Tail bound for a general supermartingale map; ``valid`` is False below the threshold."""
    if k < 1:
        raise ValueError("k must be at least 1")
    with precision_scope():
        c, big_c, n = _general_constants(inp.e_x0, inp.delta)
        e_x0 = _mpf(inp.e_x0)
        m = mp.power(c * c * k, mpf(1) / 6)
        constants = {"c": float(c), "C": float(big_c), "N": n, "M": float(m)}
        if m <= max(e_x0, mp.power(n, mpf(1) / 6)):
            return BoundResult(k, 1.0, None, False, BoundKind.GENERAL.value, constants)
        bound = round_up(big_c / mp.sqrt(k) + e_x0 / m)
        return BoundResult(k, bound, None, True, BoundKind.GENERAL.value, constants)


# ─────────────────────────────────────────────────────────────
# Series
# ─────────────────────────────────────────────────────────────

def bound_series(inp: BoundInput, ks: Sequence[int]) -> list[BoundResult]:
    """Evaluate the bound of ``inp.kind`` at every ``k``; the series is nonincreasing in ``k``."""
    evaluate = bound_diff if inp.kind is BoundKind.DIFF_BOUNDED else bound_general
    results = [evaluate(inp, k) for k in ks]
    ordered = sorted(results, key=lambda r: r.k)
    for before, after in zip(ordered, ordered[1:]):
        if after.bound > before.bound:
            raise AssertionError(f"bound increased from k={before.k} to k={after.k}")
        if before.valid and not after.valid:
            raise AssertionError(f"validity lost between k={before.k} and k={after.k}")
    logger.debug(f"[astprove:tailbounds] {inp.kind.value} series over {len(results)} points")
    return results


def series_to_frame(results: Sequence[BoundResult]) -> pd.DataFrame:
    return pd.DataFrame(
        [{"k": r.k, "bound": r.bound, "method": r.method, "t": r.t, "valid": r.valid} for r in results],
        columns=["k", "bound", "method", "t", "valid"],
    )
