"""
astprove/report.py
==================
JSON documents: certificate files and the analysis report.

Both are pydantic models. The analysis report is versioned (``"schema": 1``),
carries no timestamps and is written with sorted, fixed formatting so that the
same inputs and seed give byte-identical files. The CSV output is a projection
of the report.
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from pathlib import Path
from typing import Literal, Optional, Sequence, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .certificates import LinearProgressFunction, SupermartingaleMap
from .errors import CertificateFormatError, LocatedError
from .lang.parser import parse_expr
from .lang.printer import format_expr

SCHEMA_VERSION = 1

Method = Literal["smap_diff_bounded", "smap_general", "clt_lpf", "user_certificate", "unknown"]
TailClass = Literal["O(1/sqrt(k))", "O(k^-1/6)", "none"]
LoopVerdict = Literal["AST_certified", "AST_certified_on_box", "inconclusive"]


def rational_text(value) -> str:
    value = Fraction(value)
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


def _rational(value: Union[str, int, None]) -> Optional[str]:
    if value is None:
        return None
    try:
        return rational_text(Fraction(str(value).replace(" ", "")))
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"'{value}' is not a rational number") from None


# ─────────────────────────────────────────────────────────────
# Certificate files
# ─────────────────────────────────────────────────────────────

class CertificateFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["smap", "lpf"]
    h: Optional[str] = None
    delta: Optional[str] = "1"
    zeta: Optional[str] = None
    a: Optional[list[str]] = None
    c: Optional[str] = None

    @field_validator("delta", "zeta", "c", mode="before")
    @classmethod
    def _check_rational(cls, value):
        return _rational(value)

    @field_validator("a", mode="before")
    @classmethod
    def _check_vector(cls, value):
        if value is None:
            return None
        return [_rational(v) for v in value]

    def to_certificate(self, pvars: Sequence[str]) -> Union[SupermartingaleMap, LinearProgressFunction]:
        """Build the candidate for a loop over ``pvars``.

        Raises
        ------
        CertificateFormatError
            Required fields are missing or malformed.
        """
        if self.kind == "smap":
            if self.h is None:
                raise CertificateFormatError("an smap certificate needs 'h'")
            try:
                h = parse_expr(self.h, pvars, rational=True, allow_isqrt_term=True)
                return SupermartingaleMap(h, Fraction(self.delta or "1"),
                                          None if self.zeta is None else Fraction(self.zeta))
            except (LocatedError, ValueError) as exc:
                raise CertificateFormatError(f"bad smap certificate: {exc}") from exc

        if self.a is not None:
            if len(self.a) != len(pvars):
                raise CertificateFormatError(f"'a' has {len(self.a)} entries, the loop has {len(pvars)} variables")
            return LinearProgressFunction(tuple(Fraction(v) for v in self.a), Fraction(self.c or "0"))
        if self.h is None:
            raise CertificateFormatError("an lpf certificate needs 'a' and 'c', or an affine 'h'")
        try:
            h = parse_expr(self.h, pvars, rational=True)
        except LocatedError as exc:
            raise CertificateFormatError(f"bad lpf certificate: {exc}") from exc
        a, c = SupermartingaleMap(h).affine_form(pvars)
        return LinearProgressFunction(a, c)

    @classmethod
    def from_certificate(cls, cert: Union[SupermartingaleMap, LinearProgressFunction],
                         pvars: Sequence[str]) -> "CertificateFile":
        if isinstance(cert, SupermartingaleMap):
            return cls(kind="smap", h=format_expr(cert.h), delta=rational_text(cert.delta),
                       zeta=None if cert.zeta is None else rational_text(cert.zeta))
        expr = SupermartingaleMap.affine(pvars, cert.a, cert.c).h
        return cls(kind="lpf", h=format_expr(expr), delta=None,
                   a=[rational_text(v) for v in cert.a], c=rational_text(cert.c))


def load_certificate(path: Union[str, Path]) -> CertificateFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CertificateFormatError(f"cannot read certificate '{path}': {exc}") from exc
    return parse_certificate(text)


def parse_certificate(text: str) -> CertificateFile:
    try:
        return CertificateFile.model_validate_json(text)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(p) for p in first["loc"]) or "document"
        raise CertificateFormatError(f"certificate {where}: {first['msg']}") from exc


# ─────────────────────────────────────────────────────────────
# Analysis report
# ─────────────────────────────────────────────────────────────

class BoundInputs(BaseModel):
    e_x0: str
    delta: str
    c_diff: Optional[str] = None
    kind: Literal["diff_bounded", "general"]


class BoundPoint(BaseModel):
    k: int
    bound: float
    t: Optional[float] = None
    valid: bool = True


class EmpiricalPoint(BaseModel):
    k: int
    estimate: float
    wilson95: tuple[float, float]
    wilson99: tuple[float, float]
    trials: int
    seed: int


class PostCheck(BaseModel):
    passed: bool
    failed_ks: list[int] = Field(default_factory=list)
    skipped: Optional[str] = None


class LoopEntry(BaseModel):
    loop_id: int
    loop: str
    method: Method
    certificate: Optional[CertificateFile] = None
    check_mode: Optional[str] = None
    delta: Optional[str] = None
    zeta: Optional[str] = None
    tail_class: TailClass = "none"
    verdict: LoopVerdict = "inconclusive"
    entry: Literal["deterministic", "random", "not-entered"] = "random"
    init: Optional[dict[str, int]] = None
    bound_inputs: Optional[BoundInputs] = None
    bounds: list[BoundPoint] = Field(default_factory=list)
    empirical: list[EmpiricalPoint] = Field(default_factory=list)
    post_check: Optional[PostCheck] = None
    notes: list[str] = Field(default_factory=list)


class AnalysisReport(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: int = Field(SCHEMA_VERSION, alias="schema")
    tool_version: str
    program_hash: str
    seed: int
    loops: list[LoopEntry]

    def to_json(self) -> str:
        payload = self.model_dump(mode="json", by_alias=True)
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def write(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")


def program_hash(source: str) -> str:
    return hashlib.sha256(source.encode("utf-8")).hexdigest()


def report_to_frame(report: AnalysisReport) -> pd.DataFrame:
    """One row per (loop, k) with the bound and the empirical estimate side by side."""
    columns = ["loop_id", "k", "bound", "valid", "estimate", "wilson95_lo", "wilson95_hi"]
    frames = []
    for entry in report.loops:
        bounds = pd.DataFrame([{"k": b.k, "bound": b.bound, "valid": b.valid} for b in entry.bounds],
                              columns=["k", "bound", "valid"])
        empirical = pd.DataFrame(
            [{"k": e.k, "estimate": e.estimate, "wilson95_lo": e.wilson95[0], "wilson95_hi": e.wilson95[1]}
             for e in entry.empirical],
            columns=["k", "estimate", "wilson95_lo", "wilson95_hi"],
        )
        if bounds.empty and empirical.empty:
            continue
        merged = pd.merge(bounds, empirical, on="k", how="outer").sort_values("k")
        merged.insert(0, "loop_id", entry.loop_id)
        frames.append(merged)
    if not frames:
        return pd.DataFrame(columns=columns)
    return pd.concat(frames, ignore_index=True)[columns]
