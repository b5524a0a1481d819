"""
astprove/dist.py
================
Discrete integer distributions for sampling variables.

Three families are supported: finite tables with exact rational probabilities,
the two-sided geometric law ``P(r=k) = (1-p)^(|k|-1) * p/2`` for ``k != 0``, and
point masses. A :class:`SamplingFunction` assigns one of them to every sampling
variable; its product is the joint law of a sample vector.

Header syntax (``rvar r ~ <dist>;``)::

    uniform(a..b)
    table{-1:1/2, 1:1/2}
    point(3)
    two_sided_geometric(1/2)
"""

from __future__ import annotations

import itertools
import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Optional, Sequence, Union

import numpy as np
from cachetools import LRUCache, cached

from .errors import GrowthUnbounded, InfiniteSupport, ParseError

logger = logging.getLogger("astprove.dist")

_TWO_64 = 1 << 64


# ─────────────────────────────────────────────────────────────
# Distribution families
# ─────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class FiniteSupport:
    """Finite table of ``(value, probability)`` pairs, sorted by value."""

    points: tuple[tuple[int, Fraction], ...]

    def __post_init__(self):
        ordered = tuple(sorted((int(v), Fraction(p)) for v, p in self.points))
        values = [v for v, _ in ordered]
        if not ordered:
            raise ValueError("finite distribution needs at least one point")
        if len(set(values)) != len(values):
            raise ValueError(f"duplicate support values in {values}")
        for value, prob in ordered:
            if not (0 < prob <= 1):
                raise ValueError(f"probability {prob} of value {value} is outside (0, 1]")
        total = sum(p for _, p in ordered)
        if total != 1:
            raise ValueError(f"probabilities sum to {total}, not 1")
        object.__setattr__(self, "points", ordered)

    @property
    def is_finite(self) -> bool:
        return True


@dataclass(frozen=True)
class TwoSidedGeometric:
    p: Fraction

    def __post_init__(self):
        p = Fraction(self.p)
        if not (0 < p < 1):
            raise ValueError(f"two-sided geometric parameter {p} must lie in (0, 1)")
        object.__setattr__(self, "p", p)

    @property
    def is_finite(self) -> bool:
        return False

    def prob(self, k: int) -> Fraction:
        if k == 0:
            return Fraction(0)
        return (1 - self.p) ** (abs(k) - 1) * self.p / 2

    def tail_mass(self, cutoff: int) -> Fraction:
        """P(|r| > cutoff)."""
        return (1 - self.p) ** cutoff

    def abs_tail_moment(self, cutoff: int) -> Fraction:
        """E[|r| ; |r| > cutoff]."""
        return (1 - self.p) ** cutoff * (cutoff + 1 / self.p)


@dataclass(frozen=True)
class PointMass:
    value: int

    def __post_init__(self):
        object.__setattr__(self, "value", int(self.value))

    @property
    def is_finite(self) -> bool:
        return True


DiscreteDist = Union[FiniteSupport, TwoSidedGeometric, PointMass]


@dataclass(frozen=True)
class Moments:
    mean: Fraction
    variance: Fraction
    finite: bool = True


@dataclass(frozen=True)
class Interval:
    """Closed rational interval ``[lo, hi]``."""

    lo: Fraction
    hi: Fraction

    @classmethod
    def point(cls, value) -> "Interval":
        value = Fraction(value)
        return cls(value, value)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, value) -> bool:
        return self.lo <= value <= self.hi

    def certainly_ge(self, threshold) -> bool:
        return self.lo >= threshold

    def certainly_lt(self, threshold) -> bool:
        return self.hi < threshold

    def certainly_le(self, threshold) -> bool:
        return self.hi <= threshold

    def certainly_gt(self, threshold) -> bool:
        return self.lo > threshold


def support(dist: DiscreteDist) -> tuple[tuple[int, Fraction], ...]:
    """Support points of a finite-support distribution."""
    if isinstance(dist, PointMass):
        return ((dist.value, Fraction(1)),)
    if isinstance(dist, FiniteSupport):
        return dist.points
    raise InfiniteSupport(f"{describe(dist)} has infinite support")


@cached(LRUCache(maxsize=256))
def moments(dist: DiscreteDist) -> Moments:
    if isinstance(dist, TwoSidedGeometric):
        return Moments(Fraction(0), (2 - dist.p) / dist.p ** 2)
    points = support(dist)
    mean = sum(v * p for v, p in points)
    variance = sum((v - mean) ** 2 * p for v, p in points)
    return Moments(Fraction(mean), Fraction(variance))


def mean_abs(dist: DiscreteDist) -> Fraction:
    if isinstance(dist, TwoSidedGeometric):
        return 1 / dist.p
    return Fraction(sum(abs(v) * p for v, p in support(dist)))


def max_abs_value(dist: DiscreteDist) -> int:
    if isinstance(dist, TwoSidedGeometric):
        raise InfiniteSupport(f"{describe(dist)} has unbounded values")
    return max(abs(v) for v, _ in support(dist))


# ─────────────────────────────────────────────────────────────
# Sampling function (the product law)
# ─────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SamplingFunction:
    """Ordered map from sampling variable name to its distribution."""

    names: tuple[str, ...]
    dists: tuple[DiscreteDist, ...]

    def __post_init__(self):
        if len(self.names) != len(self.dists):
            raise ValueError("every sampling variable needs exactly one distribution")

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[str, DiscreteDist]]) -> "SamplingFunction":
        return cls(tuple(n for n, _ in pairs), tuple(d for _, d in pairs))

    def __getitem__(self, name: str) -> DiscreteDist:
        return self.dists[self.names.index(name)]

    def __len__(self) -> int:
        return len(self.names)

    def items(self) -> Iterator[tuple[str, DiscreteDist]]:
        return iter(zip(self.names, self.dists))

    @property
    def is_finite(self) -> bool:
        return all(d.is_finite for d in self.dists)


@cached(LRUCache(maxsize=128))
def joint_support(sampling: SamplingFunction) -> tuple[tuple[tuple[int, ...], Fraction], ...]:
    """Cartesian product of the per-variable supports with product probabilities."""
    per_var = [support(d) for d in sampling.dists]
    entries = []
    for combo in itertools.product(*per_var):
        prob = Fraction(1)
        for _, p in combo:
            prob *= p
        entries.append((tuple(v for v, _ in combo), prob))
    total = sum(p for _, p in entries)
    if total != 1:
        raise AssertionError(f"joint support probabilities sum to {total}")
    return tuple(entries)


def mean_vector(sampling: SamplingFunction) -> tuple[Fraction, ...]:
    return tuple(moments(d).mean for d in sampling.dists)


def variance_vector(sampling: SamplingFunction) -> tuple[Fraction, ...]:
    return tuple(moments(d).variance for d in sampling.dists)


# ─────────────────────────────────────────────────────────────
# Expectation with certified truncation
# ─────────────────────────────────────────────────────────────

def _truncation_error(sampling: SamplingFunction, cutoff: int, growth: Fraction) -> Fraction:
    """Upper bound on ``|E[f; rv outside the box]|`` when ``|f| <= growth * (1 + |rv|_1)``."""
    abs_means = [mean_abs(d) for d in sampling.dists]
    error = Fraction(0)
    for i, dist in enumerate(sampling.dists):
        if dist.is_finite:
            continue
        others = 1 + sum(m for j, m in enumerate(abs_means) if j != i)
        error += dist.tail_mass(cutoff) * others + dist.abs_tail_moment(cutoff)
    return growth * error


def _truncated_support(dist: DiscreteDist, cutoff: int) -> list[tuple[int, Fraction]]:
    if dist.is_finite:
        return list(support(dist))
    return [(k, dist.prob(k)) for k in range(-cutoff, cutoff + 1) if k != 0]


def expect(
    sampling: SamplingFunction,
    f: Callable[[tuple[int, ...]], Fraction],
    tail_eps: Fraction = Fraction(1, 10 ** 9),
    growth: Optional[Fraction] = None,
) -> Interval:
    """Interval containing ``E[f(rv)]`` under the product law.

    Parameters
    ----------
    f : callable
        Rational-valued function of the sample vector.
    tail_eps : Fraction
        Allowed tail contribution per side for infinite-support variables.
    growth : Fraction, optional
        Constant ``G`` with ``|f(rv)| <= G * (1 + |rv|_1)``. Required whenever a
        variable has infinite support.
    """
    if sampling.is_finite:
        return Interval.point(sum(p * Fraction(f(rv)) for rv, p in joint_support(sampling)))

    if growth is None:
        raise GrowthUnbounded("expectation over infinite support needs a growth constant")
    growth = Fraction(growth)
    tail_eps = Fraction(tail_eps)

    cutoff = 8
    error = _truncation_error(sampling, cutoff, growth)
    while error > tail_eps:
        cutoff *= 2
        error = _truncation_error(sampling, cutoff, growth)
    logger.debug(f"[astprove:dist] Truncating infinite support at |k| <= {cutoff} (tail {float(error):.3g})")

    per_var = [_truncated_support(d, cutoff) for d in sampling.dists]
    total = Fraction(0)
    for combo in itertools.product(*per_var):
        prob = Fraction(1)
        for _, p in combo:
            prob *= p
        total += prob * Fraction(f(tuple(v for v, _ in combo)))
    return Interval(total - error, total + error)


# ─────────────────────────────────────────────────────────────
# Random number generation
# ─────────────────────────────────────────────────────────────

def make_rng(seed: int, *spawn_key: int) -> np.random.Generator:
    """Counter-based generator for stream ``spawn_key`` of ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=tuple(spawn_key))))


def thresholds_from_cumulative(cumulative: Sequence) -> np.ndarray:
    """Scale cumulative probabilities to 64-bit thresholds for ``searchsorted``.

    Entries may be ``Fraction`` (exact) or mpmath numbers evaluated at the active
    precision.
    """
    out = []
    for cum in cumulative:
        if isinstance(cum, Fraction):
            scaled = (cum.numerator << 64) // cum.denominator
        else:
            scaled = int(cum * _TWO_64)
        out.append(min(max(scaled, 0), _TWO_64 - 1))
    return np.array(out, dtype=np.uint64)


@cached(LRUCache(maxsize=256))
def _table_for(dist: FiniteSupport) -> tuple[np.ndarray, np.ndarray]:
    values = np.array([v for v, _ in dist.points], dtype=np.int64)
    cumulative = list(itertools.accumulate(p for _, p in dist.points))[:-1]
    return values, thresholds_from_cumulative(cumulative)


def draw_from_table(values: np.ndarray, thresholds: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
    uniforms = rng.bit_generator.random_raw(size)
    return values[np.searchsorted(thresholds, uniforms, side="right")]


def sample_batch(dist: DiscreteDist, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` independent values as an ``int64`` array."""
    if isinstance(dist, PointMass):
        return np.full(size, dist.value, dtype=np.int64)
    if isinstance(dist, FiniteSupport):
        values, thresholds = _table_for(dist)
        return draw_from_table(values, thresholds, rng, size)
    magnitude = rng.geometric(float(dist.p), size).astype(np.int64)
    negative = (rng.bit_generator.random_raw(size) & np.uint64(1)).astype(bool)
    return np.where(negative, -magnitude, magnitude)


def sample(dist: DiscreteDist, rng: np.random.Generator) -> int:
    return int(sample_batch(dist, rng, 1)[0])


# ─────────────────────────────────────────────────────────────
# Text form
# ─────────────────────────────────────────────────────────────

_NUM = r"-?\d+"
_PROB = r"\d+(?:\s*/\s*\d+)?"
_UNIFORM_RE = re.compile(rf"^uniform\s*\(\s*({_NUM})\s*\.\.\s*({_NUM})\s*\)$")
_POINT_RE = re.compile(rf"^point\s*\(\s*({_NUM})\s*\)$")
_GEOMETRIC_RE = re.compile(rf"^two_sided_geometric\s*\(\s*({_PROB})\s*\)$")
_TABLE_RE = re.compile(r"^table\s*\{(.*)\}$", re.DOTALL)
_ENTRY_RE = re.compile(rf"^({_NUM})\s*:\s*({_PROB})$")


def _fraction(text: str) -> Fraction:
    return Fraction(text.replace(" ", ""))


def parse_dist(text: str) -> DiscreteDist:
    """Parse a header distribution expression; raises ParseError without a location."""
    text = text.strip()
    try:
        if m := _UNIFORM_RE.match(text):
            lo, hi = int(m.group(1)), int(m.group(2))
            if lo > hi:
                raise ParseError(f"empty range uniform({lo}..{hi})")
            width = hi - lo + 1
            return FiniteSupport(tuple((v, Fraction(1, width)) for v in range(lo, hi + 1)))
        if m := _POINT_RE.match(text):
            return PointMass(int(m.group(1)))
        if m := _GEOMETRIC_RE.match(text):
            return TwoSidedGeometric(_fraction(m.group(1)))
        if m := _TABLE_RE.match(text):
            entries = [e.strip() for e in m.group(1).split(",") if e.strip()]
            points = []
            for entry in entries:
                em = _ENTRY_RE.match(entry)
                if not em:
                    raise ParseError(f"bad table entry '{entry}'", expected="value:prob")
                points.append((int(em.group(1)), _fraction(em.group(2))))
            return FiniteSupport(tuple(points))
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"invalid distribution '{text}': {exc}") from exc
    raise ParseError(
        f"unknown distribution '{text}'",
        expected="uniform(a..b), table{v:p, ...}, point(v) or two_sided_geometric(p)",
    )


def describe(dist: DiscreteDist) -> str:
    """Canonical text form; ``parse_dist(describe(d)) == d``."""
    if isinstance(dist, PointMass):
        return f"point({dist.value})"
    if isinstance(dist, TwoSidedGeometric):
        return f"two_sided_geometric({dist.p})"
    return "table{" + ", ".join(f"{v}:{p}" for v, p in dist.points) + "}"
