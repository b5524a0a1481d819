"""
astprove/certificates.py
========================
Checkers for supermartingale maps and linear progress functions.

A supermartingale map is ``h(in, pv)`` (``h(out, .) = 0``) with constants
``delta`` and an optional difference bound ``zeta``. Conditions checked, for
every ``pv`` satisfying the guard:

    D1     h(out, .) = 0                           (by construction)
    D2(i)  h(in, pv) >= delta
    D2(ii) h(in, F(pv, rv)) >= delta               for every rv in the support
    D3.1   E[h(in, F(pv, rv))] <= h(in, pv)
    D3.2   E[|g|] >= delta                         g = h(in, F(pv, rv)) - h(in, pv)
    D4     |g| <= zeta, and h(in, F) <= zeta when F leaves the loop   (zeta given)

A linear progress function ``h(pv) = a.pv + c`` of an incremental loop
(``F(pv, rv) = pv + A rv``) must satisfy:

    L1     h is affine                             (by construction)
    L2     guard(pv) implies h(pv) > 0
    L3     sum (aA)_i mu_i <= 0 and sum (aA)_i^2 sigma_i^2 > 0

Symbolic checks cover affine ``h``, affine guards and incremental bodies with
finite support and are exact. Everything else is checked point by point over a
box and reported as ``certified-on-box``. A refutation always carries a concrete
witness that :func:`replay` re-evaluates from scratch.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Optional, Sequence, Union

from .dist import (
    Interval, SamplingFunction, expect, joint_support, make_rng, max_abs_value, moments, support,
)
from .errors import IntervalTooWide, NotIncremental, UnsupportedSymbolic
from .lang.compiler import eval_expr
from .lang.normal_form import SingleWhileLoop
from .lang.printer import format_expr
from .lang.syntax import Expr, Term
from .lincons import Feasible, Infeasible, LinExpr, Polyhedron, Unbounded, maximize, minimize, solve

logger = logging.getLogger("astprove.certificates")

BOX_POINT_CAP = 200_000
SAMPLED_POINTS = 20_000
LP_BOX = 10 ** 6

SMAP_CONDITIONS = ("D1", "D2(i)", "D2(ii)", "D3.1", "D3.2", "D4")
LPF_CONDITIONS = ("L1", "L2", "L3")


def _num(value) -> Union[int, Fraction]:
    value = Fraction(value)
    return int(value) if value.denominator == 1 else value


# ─────────────────────────────────────────────────────────────
# Candidates
# ─────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SupermartingaleMap:
    h: Expr
    delta: Fraction = Fraction(1)
    zeta: Optional[Fraction] = None

    def __post_init__(self):
        object.__setattr__(self, "delta", Fraction(self.delta))
        if self.delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.zeta is not None:
            object.__setattr__(self, "zeta", Fraction(self.zeta))
            if self.zeta <= 0:
                raise ValueError(f"zeta must be positive, got {self.zeta}")
        if self.h.rvars():
            raise ValueError("a certificate may only mention program variables")

    @classmethod
    def affine(cls, pvars: Sequence[str], a: Sequence, c, delta=1, zeta=None) -> "SupermartingaleMap":
        terms = [Term(_num(ai), pvar=x) for x, ai in zip(pvars, a) if ai != 0]
        if c != 0 or not terms:
            terms.append(Term(_num(c)))
        return cls(Expr(tuple(terms)), Fraction(delta), None if zeta is None else Fraction(zeta))

    @property
    def difference_bounded(self) -> bool:
        return self.zeta is not None

    def value(self, pvars: Sequence[str], pv: Sequence[int]) -> Fraction:
        return Fraction(eval_expr(self.h, dict(zip(pvars, pv))))

    def affine_form(self, pvars: Sequence[str]) -> Optional[tuple[tuple[Fraction, ...], Fraction]]:
        """``(a, c)`` with ``h = a.pv + c``, or None when ``h`` uses isqrt."""
        if self.h.has_isqrt:
            return None
        a = {x: Fraction(0) for x in pvars}
        c = Fraction(0)
        for term in self.h.terms:
            if term.pvar is None:
                c += term.coeff
            else:
                a[term.pvar] += term.coeff
        return tuple(a[x] for x in pvars), c

    def describe(self) -> str:
        zeta = "absent" if self.zeta is None else str(self.zeta)
        return f"h(in) = {format_expr(self.h)}, delta = {self.delta}, zeta = {zeta}"


@dataclass(frozen=True)
class LinearProgressFunction:
    a: tuple[Fraction, ...]
    c: Fraction

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(Fraction(v) for v in self.a))
        object.__setattr__(self, "c", Fraction(self.c))

    def value(self, pv: Sequence[int]) -> Fraction:
        return sum((ai * v for ai, v in zip(self.a, pv)), Fraction(0)) + self.c

    def describe(self, pvars: Sequence[str]) -> str:
        expr = SupermartingaleMap.affine(pvars, self.a, self.c).h
        return f"h = {format_expr(expr)}"


def scale_certificate(cand: SupermartingaleMap, factor) -> SupermartingaleMap:
    """Multiply ``h``, ``delta`` and ``zeta`` by a positive rational."""
    factor = Fraction(factor)
    if factor <= 0:
        raise ValueError(f"scaling factor must be positive, got {factor}")
    terms = tuple(Term(_num(t.coeff * factor), t.pvar, t.rvar, t.sqrt_of) for t in cand.h.terms)
    zeta = None if cand.zeta is None else cand.zeta * factor
    return SupermartingaleMap(Expr(terms, loc=cand.h.loc), cand.delta * factor, zeta)


def offset_candidate(loop: SingleWhileLoop) -> SupermartingaleMap:
    """``h(in, x) = x + K`` with ``K = ceil(M^2/4) + 1``, ``M`` the largest absolute sample value.

    This is the shifted candidate for one-variable walks whose step is scaled by
    ``isqrt(x)``.
    """
    if len(loop.pvars) != 1:
        raise ValueError("offset candidates are defined for one program variable")
    bound = max(max_abs_value(d) for d in loop.sampling.dists)
    offset = -(-bound * bound // 4) + 1
    return SupermartingaleMap.affine(loop.pvars, (1,), offset)


# ─────────────────────────────────────────────────────────────
# Reports
# ─────────────────────────────────────────────────────────────

class Status(str, Enum):
    HOLDS = "holds"
    HOLDS_ON_BOX = "holds-on-box"
    VIOLATED = "violated"
    UNKNOWN = "unknown"
    NOT_APPLICABLE = "n/a"


class Verdict(str, Enum):
    CERTIFIED = "certified"
    CERTIFIED_ON_BOX = "certified-on-box"
    REFUTED = "refuted"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Witness:
    """Concrete point where ``lhs relation rhs`` should hold but does not."""

    condition: str
    pv: Optional[tuple[int, ...]]
    rv: Optional[tuple[int, ...]]
    lhs: Fraction
    relation: str
    rhs: Fraction

    def describe(self) -> str:
        where = []
        if self.pv is not None:
            where.append(f"pv={self.pv}")
        if self.rv is not None:
            where.append(f"rv={self.rv}")
        at = f" at {', '.join(where)}" if where else ""
        return f"{self.condition} fails{at}: expected {self.lhs} {self.relation} {self.rhs}"


@dataclass(frozen=True)
class ConditionResult:
    status: Status
    witness: Optional[Witness] = None
    detail: str = ""


@dataclass
class CheckReport:
    kind: str  # "smap" | "lpf"
    mode: str  # "symbolic" | "bounded" | "statistical"
    conditions: dict[str, ConditionResult]
    notes: list[str] = field(default_factory=list)

    @property
    def verdict(self) -> Verdict:
        statuses = [r.status for r in self.conditions.values()]
        if any(r.status is Status.VIOLATED and r.witness is not None for r in self.conditions.values()):
            return Verdict.REFUTED
        if all(s in (Status.HOLDS, Status.NOT_APPLICABLE) for s in statuses):
            return Verdict.CERTIFIED
        if all(s in (Status.HOLDS, Status.HOLDS_ON_BOX, Status.NOT_APPLICABLE) for s in statuses):
            return Verdict.CERTIFIED_ON_BOX
        return Verdict.INCONCLUSIVE

    @property
    def witnesses(self) -> list[Witness]:
        return [r.witness for r in self.conditions.values() if r.witness is not None]

    @property
    def reason(self) -> str:
        parts = [f"{name}: {r.detail}" for name, r in self.conditions.items()
                 if r.status in (Status.UNKNOWN, Status.VIOLATED) and r.detail]
        return "; ".join(parts + self.notes)


# ─────────────────────────────────────────────────────────────
# Domains
# ─────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Box:
    """Integer box ``lows[i] <= pv[i] <= highs[i]`` in program-variable order."""

    names: tuple[str, ...]
    lows: tuple[int, ...]
    highs: tuple[int, ...]

    def __post_init__(self):
        for name, lo, hi in zip(self.names, self.lows, self.highs):
            if lo > hi:
                raise ValueError(f"empty range {lo}..{hi} for '{name}'")

    @classmethod
    def uniform(cls, names: Sequence[str], lo: int, hi: int) -> "Box":
        return cls(tuple(names), (lo,) * len(names), (hi,) * len(names))

    @classmethod
    def parse(cls, text: str, names: Sequence[str]) -> "Box":
        """``"lo..hi"`` for every variable, or ``"x=lo..hi,y=lo..hi"``."""
        text = text.strip()
        if "=" not in text:
            lo, hi = _range(text)
            return cls.uniform(names, lo, hi)
        ranges = {}
        for part in text.split(","):
            name, _, span = part.partition("=")
            name = name.strip()
            if name not in names:
                raise ValueError(f"box mentions unknown variable '{name}'")
            ranges[name] = _range(span)
        missing = [n for n in names if n not in ranges]
        if missing:
            raise ValueError(f"box has no range for {', '.join(missing)}")
        return cls(tuple(names), tuple(ranges[n][0] for n in names), tuple(ranges[n][1] for n in names))

    @property
    def size(self) -> int:
        return math.prod(hi - lo + 1 for lo, hi in zip(self.lows, self.highs))

    def points(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(*(range(lo, hi + 1) for lo, hi in zip(self.lows, self.highs)))

    def sample(self, count: int, seed: int = 0) -> list[tuple[int, ...]]:
        rng = make_rng(seed)
        columns = [rng.integers(lo, hi, size=count, endpoint=True) for lo, hi in zip(self.lows, self.highs)]
        return [tuple(int(v) for v in row) for row in zip(*columns)]

    def describe(self) -> str:
        return ", ".join(f"{n} in [{lo}, {hi}]" for n, lo, hi in zip(self.names, self.lows, self.highs))


def _range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.strip().partition("..")
    if not sep:
        raise ValueError(f"expected lo..hi, got '{text}'")
    return int(lo), int(hi)


@dataclass(frozen=True)
class Symbolic:
    """Check for all valuations; ``fallback`` is used when that is out of scope."""

    fallback: Optional[Box] = None


SYMBOLIC = Symbolic()
Domain = Union[Symbolic, Box]


def box_points(loop: SingleWhileLoop, box: Box) -> tuple[str, Iterable[tuple[int, ...]]]:
    if box.names != loop.pvars:
        raise ValueError(f"box variables {box.names} do not match loop variables {loop.pvars}")
    if box.size <= BOX_POINT_CAP:
        return "bounded", box.points()
    logger.warning(f"[astprove:certificates] Box has {box.size} points; checking "
                   f"{SAMPLED_POINTS} sampled points instead")
    return "statistical", box.sample(SAMPLED_POINTS)


# ─────────────────────────────────────────────────────────────
# Shared helpers
# ─────────────────────────────────────────────────────────────

def _in_support(sampling: SamplingFunction, rv: Optional[Sequence[int]]) -> bool:
    if rv is None or len(rv) != len(sampling):
        return False
    for value, dist in zip(rv, sampling.dists):
        if dist.is_finite:
            if value not in {v for v, _ in support(dist)}:
                return False
        elif value == 0:
            return False
    return True


def _gain(loop: SingleWhileLoop, a: Sequence[Fraction]) -> tuple[Fraction, ...]:
    """Row vector ``a^T A`` of an incremental loop."""
    matrix = loop.incremental
    return tuple(sum((a[x] * matrix[x][i] for x in range(len(a))), Fraction(0))
                 for i in range(len(loop.rvars)))


def _dot(u: Sequence, v: Sequence) -> Fraction:
    return sum((Fraction(x) * y for x, y in zip(u, v)), Fraction(0))


def disjunct_polyhedra(loop: SingleWhileLoop) -> list[Polyhedron]:
    """Nonempty rational polyhedra, one per disjunct of an affine guard."""
    out = []
    for conj in loop.guard_dnf:
        poly = Polyhedron.from_rows(loop.pvars, [(p.linear_coeffs(), p.const) for p in conj])
        if not poly.is_empty():
            out.append(poly)
    return out


def _boxed(poly: Polyhedron) -> Polyhedron:
    rows = []
    for x in poly.variables:
        rows.append(({x: -1}, LP_BOX))
        rows.append(({x: 1}, LP_BOX))
    return poly.with_rows(rows)


def _extreme(poly: Polyhedron, objective: LinExpr, upward: bool):
    """``(status, value, point)`` of the LP optimum; status is optimal, unbounded or empty."""
    optimize = maximize if upward else minimize
    try:
        result = optimize(poly.system(), objective)
    except Unbounded:
        result = optimize(_boxed(poly).system(), objective)
        point = result.assignment if isinstance(result, Feasible) else None
        return "unbounded", None, point
    if isinstance(result, Infeasible):
        return "empty", None, None
    return "optimal", result.objective, result.assignment


def _integer_candidates(point: dict[str, Fraction], pvars: Sequence[str]) -> Iterator[tuple[int, ...]]:
    spread = 1 if len(pvars) <= 3 else 0
    choices = []
    for x in pvars:
        v = Fraction(point.get(x, 0))
        lo, hi = math.floor(v) - spread, math.ceil(v) + spread
        choices.append(sorted(range(lo, hi + 1), key=lambda n, v=v: (abs(n - v), n)))
    yield from sorted(itertools.product(*choices),
                      key=lambda cand: sum(abs(n - Fraction(point.get(x, 0))) for n, x in zip(cand, pvars)))


def _search(loop: SingleWhileLoop, hints: Sequence[dict], probe: Callable[[tuple[int, ...]], Optional[Witness]]) -> Optional[Witness]:
    for hint in hints:
        if hint is None:
            continue
        for cand in _integer_candidates(hint, loop.pvars):
            if loop.holds(cand):
                found = probe(cand)
                if found is not None:
                    return found
    return None


def _guard_point(loop: SingleWhileLoop, polys: Sequence[Polyhedron]) -> Optional[tuple[int, ...]]:
    for poly in polys:
        result = solve(_boxed(poly).system())
        if isinstance(result, Feasible):
            for cand in _integer_candidates(result.assignment, loop.pvars):
                if loop.holds(cand):
                    return cand
    return None


def _min_over_guard(loop, polys, objective: LinExpr, threshold: Fraction, strict: bool,
                    probe: Callable[[tuple[int, ...]], Optional[Witness]]) -> ConditionResult:
    """Check ``objective >= threshold`` (``>`` when strict) on every disjunct."""
    hints = []
    worst = None
    for poly in polys:
        status, value, point = _extreme(poly, objective, upward=False)
        if status == "empty":
            continue
        if status == "optimal" and (value > threshold if strict else value >= threshold):
            continue
        hints.append(point)
        worst = "unbounded below" if status == "unbounded" else f"down to {value}"
    if not hints:
        return ConditionResult(Status.HOLDS)
    witness = _search(loop, hints, probe)
    if witness is not None:
        return ConditionResult(Status.VIOLATED, witness)
    return ConditionResult(Status.UNKNOWN, detail=f"rational relaxation goes {worst}; no integer witness found")


# ─────────────────────────────────────────────────────────────
# Supermartingale maps
# ─────────────────────────────────────────────────────────────

def _symbolic_setup(loop: SingleWhileLoop, cand: SupermartingaleMap):
    obstacles = []
    if not loop.is_incremental:
        obstacles.append("body is not incremental")
    if not loop.guard_is_affine:
        obstacles.append("guard is not affine")
    form = cand.affine_form(loop.pvars)
    if form is None:
        obstacles.append("h is not affine")
    if not loop.sampling.is_finite:
        obstacles.append("a sampling variable has infinite support")
    if obstacles:
        raise UnsupportedSymbolic("; ".join(obstacles))
    return form


def exit_regions(loop: SingleWhileLoop, polys: Sequence[Polyhedron]):
    """Yield ``(polyhedron, rv)`` pairs over-approximating guard-true ``pv`` whose successor exits."""
    support = joint_support(loop.sampling)
    matrix = loop.incremental
    for poly in polys:
        for ineq in poly.inequalities:
            coeffs = dict(ineq.coeffs)
            for rv, _ in support:
                shift = sum((coeffs.get(x, 0) * _dot(matrix[i], rv) for i, x in enumerate(loop.pvars)),
                            Fraction(0))
                negated = ({x: -v for x, v in coeffs.items()}, -(ineq.const + shift) - 1)
                yield poly.with_rows([negated]), rv


def exit_value_bound(loop: SingleWhileLoop, a: Sequence[Fraction], c: Fraction) -> Optional[Fraction]:
    """Upper bound on ``h(F(pv, rv))`` over exiting steps, or None when unbounded.

    Returns 0 when no step can exit from a guard-true valuation.
    """
    polys = disjunct_polyhedra(loop)
    gain = _gain(loop, a)
    best = Fraction(0)
    for region, rv in exit_regions(loop, polys):
        objective = LinExpr(dict(zip(loop.pvars, a)), c + _dot(gain, rv))
        status, value, _ = _extreme(region, objective, upward=True)
        if status == "unbounded":
            return None
        if status == "optimal":
            best = max(best, value)
    return best


def _smap_symbolic(loop: SingleWhileLoop, cand: SupermartingaleMap) -> dict[str, ConditionResult]:
    a, c = _symbolic_setup(loop, cand)
    pvars = loop.pvars
    delta = cand.delta
    support = joint_support(loop.sampling)
    gain = _gain(loop, a)
    steps = [(rv, p, _dot(gain, rv)) for rv, p in support]
    h_lin = LinExpr(dict(zip(pvars, a)), c)
    h = lambda pv: cand.value(pvars, pv)  # noqa: E731
    polys = disjunct_polyhedra(loop)
    out = {"D1": ConditionResult(Status.HOLDS, detail="h(out) = 0 by construction")}

    if not polys:
        for name in SMAP_CONDITIONS[1:]:
            out[name] = ConditionResult(Status.HOLDS, detail="guard is unsatisfiable")
        if cand.zeta is None:
            out["D4"] = ConditionResult(Status.NOT_APPLICABLE)
        return out

    def probe_d2i(pv):
        value = h(pv)
        return Witness("D2(i)", pv, None, value, ">=", delta) if value < delta else None

    out["D2(i)"] = _min_over_guard(loop, polys, h_lin, delta, False, probe_d2i)

    def probe_d2ii(pv):
        for rv, _, _ in steps:
            value = h(loop.update(pv, rv))
            if value < delta:
                return Witness("D2(ii)", pv, rv, value, ">=", delta)
        return None

    lowest = min(g for _, _, g in steps)
    out["D2(ii)"] = _min_over_guard(loop, polys, h_lin + lowest, delta, False, probe_d2ii)

    anchor = _guard_point(loop, polys)
    drift = sum((p * g for _, p, g in steps), Fraction(0))
    if drift <= 0:
        out["D3.1"] = ConditionResult(Status.HOLDS, detail=f"drift a.A.mu = {drift}")
    elif anchor is not None:
        expected = sum((p * h(loop.update(anchor, rv)) for rv, p, _ in steps), Fraction(0))
        out["D3.1"] = ConditionResult(Status.VIOLATED, Witness("D3.1", anchor, None, expected, "<=", h(anchor)))
    else:
        out["D3.1"] = ConditionResult(Status.UNKNOWN, detail=f"drift {drift} > 0 but no integer guard point found")

    vibration = sum((p * abs(g) for _, p, g in steps), Fraction(0))
    if vibration >= delta:
        out["D3.2"] = ConditionResult(Status.HOLDS, detail=f"E|g| = {vibration}")
    elif anchor is not None:
        out["D3.2"] = ConditionResult(Status.VIOLATED, Witness("D3.2", anchor, None, vibration, ">=", delta))
    else:
        out["D3.2"] = ConditionResult(Status.UNKNOWN, detail=f"E|g| = {vibration} but no integer guard point found")

    out["D4"] = _d4_symbolic(loop, cand, polys, steps, anchor, h)
    return out


def _d4_symbolic(loop, cand, polys, steps, anchor, h) -> ConditionResult:
    zeta = cand.zeta
    if zeta is None:
        return ConditionResult(Status.NOT_APPLICABLE)
    rv_far, _, g_far = max(steps, key=lambda s: abs(s[2]))
    if abs(g_far) > zeta:
        if anchor is None:
            return ConditionResult(Status.UNKNOWN, detail=f"|g| reaches {abs(g_far)} but no integer guard point found")
        return ConditionResult(Status.VIOLATED, Witness("D4", anchor, rv_far, abs(g_far), "<=", zeta))

    a, c = cand.affine_form(loop.pvars)
    gain = _gain(loop, a)
    unresolved = []
    for region, rv in exit_regions(loop, polys):
        objective = LinExpr(dict(zip(loop.pvars, a)), c + _dot(gain, rv))
        status, value, point = _extreme(region, objective, upward=True)
        if status == "empty" or (status == "optimal" and value <= zeta):
            continue

        def probe(pv, rv=rv):
            succ = loop.update(pv, rv)
            value = h(succ)
            if not loop.holds(succ) and value > zeta:
                return Witness("D4", pv, rv, value, "<=", zeta)
            return None

        witness = _search(loop, [point], probe)
        if witness is not None:
            return ConditionResult(Status.VIOLATED, witness)
        unresolved.append("unbounded" if status == "unbounded" else str(value))
    if unresolved:
        return ConditionResult(Status.UNKNOWN, detail=f"exit values may reach {', '.join(unresolved)}")
    return ConditionResult(Status.HOLDS, detail=f"max |g| = {abs(g_far)}")


def _expected_successor(loop: SingleWhileLoop, cand: SupermartingaleMap, pv) -> Optional[Interval]:
    """Interval for ``E[h(F(pv, rv))]``; None when it cannot be certified."""
    h = lambda q: cand.value(loop.pvars, q)  # noqa: E731
    if loop.sampling.is_finite:
        return Interval.point(sum((p * h(loop.update(pv, rv)) for rv, p in joint_support(loop.sampling)),
                                  Fraction(0)))
    form = cand.affine_form(loop.pvars)
    if form is None or not loop.is_incremental:
        return None
    gain = _gain(loop, form[0])
    base = h(pv)
    growth = max([abs(base)] + [abs(g) for g in gain])
    return expect(loop.sampling, lambda rv: base + _dot(gain, rv), growth=growth)


def _expected_vibration(loop: SingleWhileLoop, cand: SupermartingaleMap, pv) -> Optional[Interval]:
    h = lambda q: cand.value(loop.pvars, q)  # noqa: E731
    base = h(pv)
    if loop.sampling.is_finite:
        return Interval.point(sum((p * abs(h(loop.update(pv, rv)) - base)
                                   for rv, p in joint_support(loop.sampling)), Fraction(0)))
    form = cand.affine_form(loop.pvars)
    if form is None or not loop.is_incremental:
        return None
    gain = _gain(loop, form[0])
    growth = max([Fraction(1)] + [abs(g) for g in gain])
    return expect(loop.sampling, lambda rv: abs(_dot(gain, rv)), growth=growth)


def _far_sample(loop: SingleWhileLoop, gain: Sequence[Fraction], pv, bad: Callable) -> Optional[tuple[int, ...]]:
    """Sample vector pushing ``gain . rv`` down until ``bad(rv)`` holds."""
    scale = 1
    for _ in range(64):
        rv = []
        for g, dist in zip(gain, loop.sampling.dists):
            if dist.is_finite:
                values = [v for v, _ in support(dist)]
                rv.append(min(values, key=lambda v: g * v))
            else:
                rv.append(-scale if g > 0 else scale)
        rv = tuple(rv)
        if bad(rv):
            return rv
        scale *= 2
    return None


def _smap_box(loop: SingleWhileLoop, cand: SupermartingaleMap, box: Box) -> tuple[str, dict[str, ConditionResult]]:
    mode, points = box_points(loop, box)
    pvars, delta, zeta = loop.pvars, cand.delta, cand.zeta
    h = lambda pv: cand.value(pvars, pv)  # noqa: E731
    finite = loop.sampling.is_finite
    support = joint_support(loop.sampling) if finite else ()
    found: dict[str, Witness] = {}
    unknown: dict[str, str] = {}
    seen = 0

    for pv in points:
        if not loop.holds(pv):
            continue
        seen += 1
        base = h(pv)
        if "D2(i)" not in found and base < delta:
            found["D2(i)"] = Witness("D2(i)", pv, None, base, ">=", delta)
        if finite:
            expected = Fraction(0)
            vibration = Fraction(0)
            for rv, p in support:
                succ = loop.update(pv, rv)
                value = h(succ)
                g = value - base
                expected += p * value
                vibration += p * abs(g)
                if "D2(ii)" not in found and value < delta:
                    found["D2(ii)"] = Witness("D2(ii)", pv, rv, value, ">=", delta)
                if zeta is not None and "D4" not in found:
                    if abs(g) > zeta:
                        found["D4"] = Witness("D4", pv, rv, abs(g), "<=", zeta)
                    elif not loop.holds(succ) and value > zeta:
                        found["D4"] = Witness("D4", pv, rv, value, "<=", zeta)
            if "D3.1" not in found and expected > base:
                found["D3.1"] = Witness("D3.1", pv, None, expected, "<=", base)
            if "D3.2" not in found and vibration < delta:
                found["D3.2"] = Witness("D3.2", pv, None, vibration, ">=", delta)
        else:
            _infinite_point(loop, cand, pv, base, found, unknown)

    out = {"D1": ConditionResult(Status.HOLDS, detail="h(out) = 0 by construction")}
    on_box = Status.HOLDS_ON_BOX if mode == "bounded" else Status.UNKNOWN
    for name in SMAP_CONDITIONS[1:]:
        if name == "D4" and zeta is None:
            out[name] = ConditionResult(Status.NOT_APPLICABLE)
        elif name in found:
            out[name] = ConditionResult(Status.VIOLATED, found[name])
        elif name in unknown:
            out[name] = ConditionResult(Status.UNKNOWN, detail=unknown[name])
        else:
            detail = f"{seen} guard points of {box.describe()}"
            if mode == "statistical":
                detail = f"no violation on {seen} sampled guard points"
            out[name] = ConditionResult(on_box, detail=detail)
    return mode, out


def _infinite_point(loop, cand, pv, base, found: dict, unknown: dict) -> None:
    """Per-point checks when some sampling variable has infinite support."""
    delta, zeta = cand.delta, cand.zeta
    form = cand.affine_form(loop.pvars)
    if form is None or not loop.is_incremental:
        for name in ("D2(ii)", "D3.1", "D3.2", "D4"):
            unknown.setdefault(name, "infinite support needs an incremental body and affine h")
        return
    gain = _gain(loop, form[0])
    unbounded = any(g != 0 and not d.is_finite for g, d in zip(gain, loop.sampling.dists))
    h = lambda q: cand.value(loop.pvars, q)  # noqa: E731

    if "D2(ii)" not in found:
        if unbounded:
            rv = _far_sample(loop, gain, pv, lambda rv: h(loop.update(pv, rv)) < delta)
            if rv is not None:
                found["D2(ii)"] = Witness("D2(ii)", pv, rv, h(loop.update(pv, rv)), ">=", delta)
        else:
            unknown.setdefault("D2(ii)", "infinite support with zero gain; not enumerated")
    if zeta is not None and "D4" not in found:
        if unbounded:
            rv = _far_sample(loop, gain, pv, lambda rv: abs(h(loop.update(pv, rv)) - base) > zeta)
            if rv is not None:
                found["D4"] = Witness("D4", pv, rv, abs(h(loop.update(pv, rv)) - base), "<=", zeta)
        else:
            unknown.setdefault("D4", "infinite support with zero gain; exits not enumerated")

    for name, interval, threshold, relation in (
        ("D3.1", _expected_successor(loop, cand, pv), base, "<="),
        ("D3.2", _expected_vibration(loop, cand, pv), delta, ">="),
    ):
        if name in found:
            continue
        violated = interval.certainly_gt(threshold) if relation == "<=" else interval.certainly_lt(threshold)
        passed = interval.certainly_le(threshold) if relation == "<=" else interval.certainly_ge(threshold)
        if violated:
            lhs = interval.lo if relation == "<=" else interval.hi
            found[name] = Witness(name, pv, None, lhs, relation, threshold)
        elif not passed:
            unknown.setdefault(name, str(IntervalTooWide(
                f"expectation interval [{float(interval.lo):.6g}, {float(interval.hi):.6g}] straddles {threshold}")))


def check_smap(loop: SingleWhileLoop, cand: SupermartingaleMap, domain: Domain = SYMBOLIC) -> CheckReport:
    """Check a supermartingale-map candidate on ``loop``.

    Parameters
    ----------
    domain : Symbolic or Box
        ``SYMBOLIC`` proves the conditions for all valuations when the loop and
        candidate are in symbolic scope; ``Symbolic(fallback=box)`` falls back to
        the box otherwise. A ``Box`` forces point-by-point checking.
    """
    if isinstance(domain, Box):
        mode, conditions = _smap_box(loop, cand, domain)
        return CheckReport("smap", mode, conditions)
    try:
        conditions = _smap_symbolic(loop, cand)
        return CheckReport("smap", "symbolic", conditions)
    except UnsupportedSymbolic as exc:
        notice = f"symbolic check unsupported ({exc})"
        if domain.fallback is None:
            logger.warning(f"[astprove:certificates] {notice}; no box to fall back to")
            conditions = {"D1": ConditionResult(Status.HOLDS, detail="h(out) = 0 by construction")}
            for name in SMAP_CONDITIONS[1:]:
                conditions[name] = ConditionResult(Status.UNKNOWN, detail="needs a box")
            return CheckReport("smap", "symbolic", conditions, [notice])
        logger.warning(f"[astprove:certificates] {notice}; falling back to {domain.fallback.describe()}")
        mode, conditions = _smap_box(loop, cand, domain.fallback)
        return CheckReport("smap", mode, conditions, [notice])


# ─────────────────────────────────────────────────────────────
# Linear progress functions
# ─────────────────────────────────────────────────────────────

def lpf_drift_and_variance(loop: SingleWhileLoop, a: Sequence[Fraction]) -> tuple[Fraction, Fraction]:
    gain = _gain(loop, a)
    stats = [moments(d) for d in loop.sampling.dists]
    drift = sum((g * m.mean for g, m in zip(gain, stats)), Fraction(0))
    variance = sum((g * g * m.variance for g, m in zip(gain, stats)), Fraction(0))
    return drift, variance


def check_lpf(loop: SingleWhileLoop, cand: LinearProgressFunction, domain: Domain = SYMBOLIC) -> CheckReport:
    """Check a linear progress function on an incremental loop.

    Raises
    ------
    NotIncremental
        The loop body is not of the form ``pv := pv + A rv``.
    """
    if not loop.is_incremental:
        raise NotIncremental(loop.describe())
    if len(cand.a) != len(loop.pvars):
        raise ValueError(f"expected {len(loop.pvars)} coefficients, got {len(cand.a)}")

    out = {"L1": ConditionResult(Status.HOLDS, detail="h is affine by construction")}
    mode = "symbolic"

    box = domain if isinstance(domain, Box) else domain.fallback
    if isinstance(domain, Box) or not loop.guard_is_affine:
        if box is None:
            out["L2"] = ConditionResult(Status.UNKNOWN, detail="non-affine guard needs a box")
        else:
            mode, out["L2"] = _lpf_box(loop, cand, box)
    else:
        def probe(pv):
            value = cand.value(pv)
            return Witness("L2", pv, None, value, ">", Fraction(0)) if value <= 0 else None

        objective = LinExpr(dict(zip(loop.pvars, cand.a)), cand.c)
        out["L2"] = _min_over_guard(loop, disjunct_polyhedra(loop), objective, Fraction(0), True, probe)

    drift, variance = lpf_drift_and_variance(loop, cand.a)
    if drift > 0:
        out["L3"] = ConditionResult(Status.VIOLATED, Witness("L3", None, None, drift, "<=", Fraction(0)),
                                    detail=f"drift {drift} > 0")
    elif variance <= 0:
        out["L3"] = ConditionResult(Status.VIOLATED, Witness("L3", None, None, variance, ">", Fraction(0)),
                                    detail="variance of the progress is 0")
    else:
        out["L3"] = ConditionResult(Status.HOLDS, detail=f"drift {drift}, variance {variance}")
    return CheckReport("lpf", mode, out)


def _lpf_box(loop: SingleWhileLoop, cand: LinearProgressFunction, box: Box) -> tuple[str, ConditionResult]:
    mode, points = box_points(loop, box)
    seen = 0
    for pv in points:
        if not loop.holds(pv):
            continue
        seen += 1
        value = cand.value(pv)
        if value <= 0:
            return mode, ConditionResult(Status.VIOLATED, Witness("L2", pv, None, value, ">", Fraction(0)))
    if mode == "statistical":
        return mode, ConditionResult(Status.UNKNOWN, detail=f"no violation on {seen} sampled guard points")
    return mode, ConditionResult(Status.HOLDS_ON_BOX, detail=f"{seen} guard points of {box.describe()}")


# ─────────────────────────────────────────────────────────────
# Witness replay
# ─────────────────────────────────────────────────────────────

def replay(loop: SingleWhileLoop, cand: Union[SupermartingaleMap, LinearProgressFunction],
           witness: Witness) -> bool:
    """Re-evaluate the violated condition at the witness; True iff it is a genuine violation."""
    if isinstance(cand, LinearProgressFunction):
        if witness.condition == "L2":
            return witness.pv is not None and loop.holds(witness.pv) and cand.value(witness.pv) <= 0
        if witness.condition == "L3":
            drift, variance = lpf_drift_and_variance(loop, cand.a)
            return drift > 0 or variance <= 0
        return False

    pv = witness.pv
    if pv is None or not loop.holds(pv):
        return False
    h = lambda q: cand.value(loop.pvars, q)  # noqa: E731
    base = h(pv)
    name = witness.condition
    if name == "D2(i)":
        return base < cand.delta
    if name == "D3.1":
        interval = _expected_successor(loop, cand, pv)
        return interval is not None and interval.certainly_gt(base)
    if name == "D3.2":
        interval = _expected_vibration(loop, cand, pv)
        return interval is not None and interval.certainly_lt(cand.delta)
    if not _in_support(loop.sampling, witness.rv):
        return False
    succ = loop.update(pv, witness.rv)
    value = h(succ)
    if name == "D2(ii)":
        return value < cand.delta
    if name == "D4":
        if cand.zeta is None:
            return False
        return abs(value - base) > cand.zeta or (not loop.holds(succ) and value > cand.zeta)
    return False
