"""
astprove/analysis.py
====================
Whole-program pipeline behind ``astprove analyze``.

Each loop of the normalized program is certified independently (certificates
hold for every valuation, so verdicts compose). Tail bounds and Monte Carlo
estimates are attached only to loops whose entry valuation is deterministic:
every component before them is loop-free and sampling-free, or a loop that was
never entered.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

from . import __version__
from .certificates import (
    BOX_POINT_CAP, Box, CheckReport, LinearProgressFunction, SupermartingaleMap, Symbolic, Verdict,
    check_lpf, check_smap,
)
from .errors import NotIncremental, SupportTooLarge
from .lang.normal_form import LoopFreeBlock, NormalizedProgram, SingleWhileLoop
from .report import (
    AnalysisReport, BoundInputs, BoundPoint, CertificateFile, EmpiricalPoint, LoopEntry, PostCheck,
    program_hash, rational_text,
)
from .simulator import estimate_tail
from .synthesis import NotFound, Synthesized, synth_lpf, synth_smap_linear
from .tailbounds import BoundInput, BoundKind, bound_series

logger = logging.getLogger("astprove.analysis")

DEFAULT_KS = (2, 8, 32)
DEFAULT_TRIALS = 10_000
DEFAULT_RADIUS = 1000

Candidate = Union[SupermartingaleMap, LinearProgressFunction]

_VERDICTS = {
    Verdict.CERTIFIED: "AST_certified",
    Verdict.CERTIFIED_ON_BOX: "AST_certified_on_box",
}


@dataclass
class LoopCertificate:
    method: str
    certificate: Optional[Candidate]
    report: Optional[CheckReport]
    notes: list[str]

    @property
    def verdict(self) -> str:
        if self.report is None:
            return "inconclusive"
        return _VERDICTS.get(self.report.verdict, "inconclusive")


def parse_init(text: Optional[str], pvars: Sequence[str]) -> dict[str, int]:
    """``"x=1,y=2"`` to a valuation; unmentioned variables start at 0."""
    values = {x: 0 for x in pvars}
    if not text:
        return values
    for part in text.split(","):
        name, sep, value = part.partition("=")
        name = name.strip()
        if not sep or name not in values:
            raise ValueError(f"bad initial assignment '{part.strip()}' (variables: {', '.join(pvars)})")
        values[name] = int(value)
    return values


def default_box(loop: SingleWhileLoop) -> Box:
    """Centered box small enough to be enumerated exhaustively."""
    radius = int((BOX_POINT_CAP ** (1 / max(1, len(loop.pvars))) - 1) // 2)
    return Box.uniform(loop.pvars, -min(radius, DEFAULT_RADIUS), min(radius, DEFAULT_RADIUS))


def _check(loop: SingleWhileLoop, cand: Candidate, box: Optional[Box]) -> CheckReport:
    domain = Symbolic(fallback=box)
    if isinstance(cand, SupermartingaleMap):
        return check_smap(loop, cand, domain)
    return check_lpf(loop, cand, domain)


def certify_loop(loop: SingleWhileLoop, box: Optional[Box] = None,
                 user: Optional[Candidate] = None) -> LoopCertificate:
    """Find the strongest certificate for ``loop``: user candidate, then smap, then lpf."""
    notes: list[str] = []
    if user is not None:
        try:
            report = _check(loop, user, box)
        except NotIncremental as exc:
            notes.append(f"user certificate: {exc}")
        else:
            if report.verdict in _VERDICTS:
                return LoopCertificate("user_certificate", user, report, notes + report.notes)
            notes.append(f"user certificate {report.verdict.value}: {report.reason}")

    try:
        found = synth_smap_linear(loop, box)
    except (NotIncremental, SupportTooLarge) as exc:
        found = NotFound("symbolic-unsupported", str(exc))
    if isinstance(found, Synthesized):
        method = "smap_diff_bounded" if found.certificate.difference_bounded else "smap_general"
        return LoopCertificate(method, found.certificate, found.report, notes + found.report.notes)
    notes.append(f"smap synthesis: {found.reason} ({found.detail})" if found.detail
                 else f"smap synthesis: {found.reason}")

    try:
        found = synth_lpf(loop)
    except NotIncremental as exc:
        found = NotFound("symbolic-unsupported", str(exc))
    if isinstance(found, Synthesized):
        return LoopCertificate("clt_lpf", found.certificate, found.report, notes + found.report.notes)
    notes.append(f"lpf synthesis: {found.reason} ({found.detail})" if found.detail
                 else f"lpf synthesis: {found.reason}")
    return LoopCertificate("unknown", None, None, notes)


def _tail_class(cert: Optional[Candidate]) -> str:
    if not isinstance(cert, SupermartingaleMap):
        return "none"
    return "O(1/sqrt(k))" if cert.difference_bounded else "O(k^-1/6)"


def _post_check(bounds: Sequence[BoundPoint], empirical: Sequence[EmpiricalPoint]) -> PostCheck:
    lower = {e.k: e.wilson95[0] for e in empirical}
    paired = [b for b in bounds if b.valid and b.k in lower]
    if not paired:
        return PostCheck(passed=True, skipped="no valid bound with an empirical estimate")
    failed = [b.k for b in paired if b.bound < lower[b.k]]
    return PostCheck(passed=not failed, failed_ks=failed)


def _series(entry: LoopEntry, loop: SingleWhileLoop, found: LoopCertificate, pv0: tuple[int, ...],
            ks: Sequence[int], trials: int, seed: int) -> None:
    cert = found.certificate
    if isinstance(cert, SupermartingaleMap):
        e_x0 = cert.value(loop.pvars, pv0)
        if e_x0 <= 0:
            entry.notes.append(f"no bound: h(in, pv0) = {e_x0} is not positive")
        else:
            kind = BoundKind.DIFF_BOUNDED if cert.difference_bounded else BoundKind.GENERAL
            inp = BoundInput(e_x0, cert.delta, cert.zeta, kind)
            entry.bound_inputs = BoundInputs(
                e_x0=rational_text(e_x0), delta=rational_text(cert.delta),
                c_diff=None if cert.zeta is None else rational_text(cert.zeta), kind=kind.value)
            entry.bounds = [BoundPoint(k=r.k, bound=r.bound, t=r.t, valid=r.valid)
                            for r in bound_series(inp, ks)]
    if trials > 0 and ks:
        estimates = estimate_tail(loop, pv0, ks, trials, seed)
        entry.empirical = [EmpiricalPoint(k=e.k, estimate=e.estimate, wilson95=e.wilson95,
                                          wilson99=e.wilson99, trials=e.trials, seed=e.seed)
                           for e in estimates]
    if entry.verdict == "AST_certified" and entry.bounds and entry.empirical:
        entry.post_check = _post_check(entry.bounds, entry.empirical)
        if not entry.post_check.passed:
            logger.error(f"[astprove:analysis] Loop #{loop.loop_id}: bound below the empirical "
                         f"Wilson-95 lower limit at k={entry.post_check.failed_ks}")
    elif entry.bounds and entry.empirical:
        logger.warning(f"[astprove:analysis] Loop #{loop.loop_id}: post-check skipped ({entry.verdict})")


def analyze_program(norm: NormalizedProgram, init: Mapping[str, int], ks: Sequence[int] = DEFAULT_KS,
                    trials: int = DEFAULT_TRIALS, seed: int = 0, box: Optional[Box] = None,
                    user: Optional[Candidate] = None) -> AnalysisReport:
    """Certify every loop and attach bounds and estimates where the entry is known."""
    pvars = norm.program.pvars
    pv: Optional[tuple[int, ...]] = tuple(int(init.get(x, 0)) for x in pvars)
    entries = []
    for component in norm.components:
        if isinstance(component, LoopFreeBlock):
            if pv is not None:
                pv = None if component.uses_sampling() else component.execute(pv, pvars)
            continue

        loop = component
        loop_box = box
        if loop_box is None and not (loop.is_incremental and loop.guard_is_affine):
            loop_box = default_box(loop)
        found = certify_loop(loop, loop_box, user)
        entry = LoopEntry(
            loop_id=loop.loop_id,
            loop=loop.describe(),
            method=found.method,
            certificate=None if found.certificate is None
            else CertificateFile.from_certificate(found.certificate, pvars),
            check_mode=None if found.report is None else found.report.mode,
            tail_class=_tail_class(found.certificate),
            verdict=found.verdict,
            notes=list(found.notes),
        )
        if isinstance(found.certificate, SupermartingaleMap):
            entry.delta = rational_text(found.certificate.delta)
            entry.zeta = None if found.certificate.zeta is None else rational_text(found.certificate.zeta)
        if loop_box is not None and loop_box is not box:
            entry.notes.append(f"out-of-scope checks used the box {loop_box.describe()}")

        if pv is None:
            entry.entry = "random"
        elif not loop.holds(pv):
            entry.entry = "not-entered"
            entry.init = dict(zip(pvars, pv))
        else:
            entry.entry = "deterministic"
            entry.init = dict(zip(pvars, pv))
            _series(entry, loop, found, pv, ks, trials, seed)
            pv = None
        logger.info(f"[astprove:analysis] Loop #{loop.loop_id}: {entry.method} -> {entry.verdict}")
        entries.append(entry)

    return AnalysisReport(
        tool_version=__version__,
        program_hash=program_hash(norm.program.source or ""),
        seed=seed,
        loops=entries,
    )


def exit_code(report: AnalysisReport) -> int:
    """0 when every loop is certified symbolically, 2 when some only on a box, 3 when some unknown."""
    verdicts = {entry.verdict for entry in report.loops}
    if "inconclusive" in verdicts:
        return 3
    if "AST_certified_on_box" in verdicts:
        return 2
    return 0


def post_check_failed(report: AnalysisReport) -> bool:
    return any(e.post_check is not None and not e.post_check.passed for e in report.loops)
