"""
astprove/synthesis.py
=====================
Template-based synthesis of affine certificates.

The template is ``h(pv) = a.pv + c`` with unknown rationals ``a`` and ``c``.
Universally quantified guard conditions become linear constraints on the
unknowns through the Farkas encoding in :mod:`astprove.lincons`; absolute values
are removed by enumerating sign vectors in lexicographic order (on box points,
one sign per primitive increment direction, keeping the cheapest fit). ``delta``
and the strict margin of (L2) are normalized to 1, which positive scaling makes
lossless. Every returned certificate is re-checked by :mod:`astprove.certificates`.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

from .certificates import (
    Box, CheckReport, LinearProgressFunction, SupermartingaleMap, Verdict, box_points,
    check_lpf, check_smap, disjunct_polyhedra, exit_value_bound,
)
from .dist import joint_support, moments
from .errors import EmptyPremise, NotIncremental, SupportTooLarge
from .lang.normal_form import SingleWhileLoop
from .lincons import AffineTemplate, Feasible, LinExpr, LinSystem, Unbounded, farkas_encode, minimize, solve

logger = logging.getLogger("astprove.synthesis")

SIGN_CAP = 12
SEED_POINTS = 16
CUT_ROUNDS = 8


@dataclass(frozen=True)
class NotFound:
    """Synthesis outcome when no certificate was produced.

    ``reason`` is one of ``infeasible``, ``symbolic-unsupported``,
    ``infinite-support`` or ``validation-failed``.
    """

    reason: str
    detail: str = ""


@dataclass(frozen=True)
class Synthesized:
    certificate: Union[SupermartingaleMap, LinearProgressFunction]
    report: CheckReport
    signs: Optional[tuple[int, ...]] = None

    @property
    def verdict(self) -> Verdict:
        return self.report.verdict


SynthesisResult = Union[Synthesized, NotFound]


# ─────────────────────────────────────────────────────────────
# Template bookkeeping
# ─────────────────────────────────────────────────────────────

class _Template:
    """Unknowns ``a[x]``, ``c`` and ``t[x] >= |a[x]|`` in a fresh system."""

    def __init__(self, pvars: Sequence[str]):
        self.pvars = tuple(pvars)
        self.system = LinSystem()
        self.a = {x: self.system.add_variable(f"a[{x}]") for x in self.pvars}
        self.c = self.system.add_variable("c")
        norm = LinExpr()
        for x in self.pvars:
            t = self.system.add_variable(f"t[{x}]")
            self.system.add(t, ">=", self.a[x], label=f"abs+[{x}]")
            self.system.add(t, ">=", -self.a[x], label=f"abs-[{x}]")
            norm = norm + t
        self.objective = norm + self.c

    def at(self, pv: Sequence[int]) -> LinExpr:
        """``a.pv + c`` as an expression in the unknowns."""
        out = self.c
        for x, v in zip(self.pvars, pv):
            if v:
                out = out + self.a[x] * v
        return out

    def gain(self, column: Sequence[int]) -> LinExpr:
        """``a.column``, the change of ``h`` along an increment."""
        out = LinExpr()
        for x, v in zip(self.pvars, column):
            if v:
                out = out + self.a[x] * v
        return out

    def conclusion(self, shift: LinExpr) -> AffineTemplate:
        """``a.pv + c + shift - 1 >= 0``."""
        return AffineTemplate(dict(self.a), self.c + shift - 1)

    def optimum(self, system: LinSystem) -> Optional[dict[str, Fraction]]:
        try:
            result = minimize(system, self.objective)
        except Unbounded:
            result = solve(system)
        return result.assignment if isinstance(result, Feasible) else None

    def read(self, assignment: dict[str, Fraction]) -> tuple[tuple[Fraction, ...], Fraction]:
        return tuple(assignment[f"a[{x}]"] for x in self.pvars), assignment["c"]


def _signs(count: int):
    return itertools.product((-1, 1), repeat=count)


def _add_vibration(system: LinSystem, diffs: Sequence[LinExpr], probs: Sequence[Fraction],
                   signs: Sequence[int], tag: str) -> None:
    total = LinExpr()
    for j, (diff, p, s) in enumerate(zip(diffs, probs, signs)):
        system.add(diff * s, ">=", 0, label=f"{tag}:sign[{j}]")
        total = total + diff * (p * s)
    system.add(total, ">=", 1, label=f"{tag}:E|g|")


def _validated(loop: SingleWhileLoop, cert, report: CheckReport, accept: tuple[Verdict, ...],
               signs=None) -> SynthesisResult:
    if report.verdict in accept:
        return Synthesized(cert, report, signs)
    logger.warning(f"[astprove:synthesis] Loop #{loop.loop_id}: synthesized certificate failed "
                   f"re-validation ({report.verdict.value})")
    return NotFound("validation-failed", report.reason)


# ─────────────────────────────────────────────────────────────
# Supermartingale maps
# ─────────────────────────────────────────────────────────────

def synth_smap_linear(loop: SingleWhileLoop, box: Optional[Box] = None) -> SynthesisResult:
    """Search for an affine supermartingale map with ``delta = 1``.

    Incremental bodies under affine guards are handled symbolically. Other
    loops need ``box``; the template is then constrained at box points and the
    result is certified on the box only, with ``zeta`` absent.

    Raises
    ------
    NotIncremental
        Non-incremental body and no box.
    SupportTooLarge
        More than ``SIGN_CAP`` joint support points.
    """
    if not loop.sampling.is_finite:
        return NotFound("infinite-support", "sign enumeration needs finite support; try synth_lpf")
    size = len(joint_support(loop.sampling))
    if size > SIGN_CAP:
        raise SupportTooLarge(size, SIGN_CAP)
    if loop.is_incremental and loop.guard_is_affine:
        return _synth_symbolic(loop)
    if box is not None:
        return _synth_on_box(loop, box)
    if not loop.is_incremental:
        raise NotIncremental(loop.describe())
    return NotFound("symbolic-unsupported", "guard is not affine; supply a box")


def _synth_symbolic(loop: SingleWhileLoop) -> SynthesisResult:
    polys = disjunct_polyhedra(loop)
    if not polys:
        cert = SupermartingaleMap.affine(loop.pvars, (0,) * len(loop.pvars), 1, zeta=1)
        return _validated(loop, cert, check_smap(loop, cert), (Verdict.CERTIFIED,))

    tpl = _Template(loop.pvars)
    matrix = loop.incremental
    support = joint_support(loop.sampling)
    columns = [tuple(sum(row[i] * v for i, v in enumerate(rv)) for row in matrix) for rv, _ in support]
    gains = [tpl.gain(col) for col in columns]
    probs = [p for _, p in support]

    base = tpl.system
    for k, poly in enumerate(polys):
        try:
            base.extend(farkas_encode(poly, tpl.conclusion(LinExpr()), prefix=f"d2i.{k}"))
            for j, g in enumerate(gains):
                base.extend(farkas_encode(poly, tpl.conclusion(g), prefix=f"d2ii.{k}.{j}"))
        except EmptyPremise:
            continue
    drift = LinExpr()
    for g, p in zip(gains, probs):
        drift = drift + g * p
    base.add(drift, "<=", 0, label="d3.1")

    tried = 0
    for signs in _signs(len(gains)):
        tried += 1
        system = base.copy()
        _add_vibration(system, gains, probs, signs, "d3.2")
        assignment = tpl.optimum(system)
        if assignment is None:
            continue
        a, c = tpl.read(assignment)
        g_max = max(abs(g.value(assignment)) for g in gains)
        exit_bound = exit_value_bound(loop, a, c)
        zeta = None if exit_bound is None else max(g_max, exit_bound)
        logger.debug(f"[astprove:synthesis] Loop #{loop.loop_id}: sign vector {signs} feasible "
                     f"after {tried} tries")
        cert = SupermartingaleMap.affine(loop.pvars, a, c, delta=1, zeta=zeta)
        return _validated(loop, cert, check_smap(loop, cert), (Verdict.CERTIFIED,), signs)
    logger.debug(f"[astprove:synthesis] Loop #{loop.loop_id}: all {tried} sign vectors infeasible")
    return NotFound("infeasible", f"no affine supermartingale map under any of {tried} sign vectors")


def _spread(points: list, count: int) -> list:
    if len(points) <= count:
        return list(points)
    step = (len(points) - 1) / (count - 1)
    return [points[round(i * step)] for i in range(count)]


def _direction(move: Sequence[int]) -> tuple[Optional[tuple[int, ...]], int]:
    """Split a displacement into a primitive direction (first nonzero entry positive) and a signed multiple."""
    g = math.gcd(*move)
    if g == 0:
        return None, 0
    unit = tuple(v // g for v in move)
    if next(v for v in unit if v) < 0:
        return tuple(-v for v in unit), -g
    return unit, g


def _solve_on_points(loop: SingleWhileLoop, sample: Sequence[tuple[int, ...]]):
    """Fit the template at ``sample`` points.

    For affine ``h`` the difference along a displacement ``m*u`` is ``m*(a.u)``,
    so one sign per primitive direction ``u`` settles every ``|g|`` at every
    point. Those direction signs are enumerated instead of per-point vectors.
    """
    support = joint_support(loop.sampling)
    tpl = _Template(loop.pvars)
    per_point = []
    directions: dict[tuple[int, ...], None] = {}
    for pv in sample:
        here = tpl.at(pv)
        tpl.system.add(here, ">=", 1, label=f"d2i@{pv}")
        drift = LinExpr()
        terms = []
        for rv, p in support:
            succ = loop.update(pv, rv)
            tpl.system.add(tpl.at(succ), ">=", 1, label=f"d2ii@{pv},{rv}")
            unit, m = _direction([s - v for s, v in zip(succ, pv)])
            if unit is None:
                continue
            drift = drift + tpl.gain(unit) * (p * m)
            terms.append((unit, p * abs(m)))
            directions.setdefault(unit)
        if not terms:
            return None
        tpl.system.add(drift, "<=", 0, label=f"d3.1@{pv}")
        per_point.append((pv, terms))

    units = sorted(directions)
    if len(units) > SIGN_CAP:
        logger.debug(f"[astprove:synthesis] Loop #{loop.loop_id}: {len(units)} increment directions "
                     f"exceed the sign cap")
        return None
    best = None
    for signs in _signs(len(units)):
        sign_of = dict(zip(units, signs))
        system = tpl.system.copy()
        for u, s in sign_of.items():
            system.add(tpl.gain(u) * s, ">=", 0, label=f"d3.2:sign{u}")
        for pv, terms in per_point:
            total = LinExpr()
            for u, weight in terms:
                total = total + tpl.gain(u) * (weight * sign_of[u])
            system.add(total, ">=", 1, label=f"d3.2@{pv}")
        assignment = tpl.optimum(system)
        if assignment is None:
            continue
        cost = tpl.objective.value(assignment)
        if best is None or cost < best[0]:
            best = (cost, tpl.read(assignment), signs)
    return None if best is None else best[1:]


def _synth_on_box(loop: SingleWhileLoop, box: Box) -> SynthesisResult:
    _, points = box_points(loop, box)
    inside = [pv for pv in points if loop.holds(pv)]
    if not inside:
        cert = SupermartingaleMap.affine(loop.pvars, (0,) * len(loop.pvars), 1)
        return _validated(loop, cert, check_smap(loop, cert, box), (Verdict.CERTIFIED_ON_BOX,))

    sample = _spread(inside, SEED_POINTS)
    for round_ in range(CUT_ROUNDS):
        found = _solve_on_points(loop, sample)
        if found is None:
            return NotFound("infeasible", f"no affine map fits {len(sample)} box points")
        (a, c), signs = found
        cert = SupermartingaleMap.affine(loop.pvars, a, c, delta=1)
        report = check_smap(loop, cert, box)
        if report.verdict is Verdict.CERTIFIED_ON_BOX:
            return Synthesized(cert, report, signs)
        fresh = [w.pv for w in report.witnesses if w.pv is not None and w.pv not in sample]
        if not fresh:
            return _validated(loop, cert, report, (Verdict.CERTIFIED_ON_BOX,), signs)
        logger.debug(f"[astprove:synthesis] Loop #{loop.loop_id}: round {round_ + 1} adds {fresh}")
        sample.extend(fresh)
    return NotFound("validation-failed", f"no box certificate after {CUT_ROUNDS} refinement rounds")


# ─────────────────────────────────────────────────────────────
# Linear progress functions
# ─────────────────────────────────────────────────────────────

def synth_lpf(loop: SingleWhileLoop) -> SynthesisResult:
    """Search for a linear progress function with margin 1 in (L2).

    Raises
    ------
    NotIncremental
        The loop body is not of the form ``pv := pv + A rv``.
    """
    if not loop.is_incremental:
        raise NotIncremental(loop.describe())
    if not loop.guard_is_affine:
        return NotFound("symbolic-unsupported",
                        "guard is not affine; check a hand-written candidate with check_lpf on a box")

    tpl = _Template(loop.pvars)
    for k, poly in enumerate(disjunct_polyhedra(loop)):
        try:
            tpl.system.extend(farkas_encode(poly, tpl.conclusion(LinExpr()), prefix=f"l2.{k}"))
        except EmptyPremise:
            continue

    matrix = loop.incremental
    stats = [moments(d) for d in loop.sampling.dists]
    gains = [tpl.gain([row[i] for row in matrix]) for i in range(len(loop.rvars))]
    drift = LinExpr()
    for g, m in zip(gains, stats):
        drift = drift + g * m.mean
    tpl.system.add(drift, "<=", 0, label="l3:drift")

    noisy = [i for i, m in enumerate(stats) if m.variance > 0]
    if not noisy:
        return NotFound("infeasible", "no sampling variable has positive variance")
    for i in noisy:
        for sign in (1, -1):
            system = tpl.system.copy()
            system.add(gains[i] * sign, ">=", 1, label=f"l3:spread[{loop.rvars[i]}]")
            assignment = tpl.optimum(system)
            if assignment is None:
                continue
            a, c = tpl.read(assignment)
            cert = LinearProgressFunction(a, c)
            logger.debug(f"[astprove:synthesis] Loop #{loop.loop_id}: progress through "
                         f"{loop.rvars[i]} with sign {sign:+d}")
            return _validated(loop, cert, check_lpf(loop, cert), (Verdict.CERTIFIED,))
    return NotFound("infeasible", "no affine progress function satisfies (L2) and (L3)")
