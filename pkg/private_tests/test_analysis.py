"""
Whole-program analysis, report models and certificate files.
"""

import json
from fractions import Fraction

import pytest

from astprove import catalog
from astprove.analysis import analyze_program, default_box, exit_code, parse_init, post_check_failed
from astprove.certificates import BOX_POINT_CAP, LinearProgressFunction, SupermartingaleMap
from astprove.errors import CertificateFormatError
from astprove.lang import normalize, parse, parse_expr
from astprove.report import CertificateFile, parse_certificate, report_to_frame


def analyze(name, init="", **kwargs):
    norm = normalize(catalog.load(name))
    return analyze_program(norm, parse_init(init, norm.program.pvars), **kwargs)


class TestInit:

    def test_defaults_to_zero(self):
        assert parse_init("y=3", ("x", "y")) == {"x": 0, "y": 3}
        assert parse_init(None, ("x",)) == {"x": 0}

    @pytest.mark.parametrize("text", ["z=1", "x", "x=one"])
    def test_rejected(self, text):
        with pytest.raises(ValueError):
            parse_init(text, ("x",))

    def test_default_box_fits_the_cap(self, parabola_walk, symmetric_walk):
        assert default_box(parabola_walk).size <= BOX_POINT_CAP
        assert default_box(symmetric_walk).lows == (-1000,)


class TestAnalyze:

    def test_symmetric_walk(self):
        report = analyze("symmetric_walk", "x=1", ks=(2, 8), trials=500, seed=3)
        (entry,) = report.loops
        assert entry.method == "smap_diff_bounded"
        assert entry.verdict == "AST_certified"
        assert entry.tail_class == "O(1/sqrt(k))"
        assert entry.entry == "deterministic" and entry.init == {"x": 1}
        assert entry.bound_inputs.e_x0 == "2"
        assert [b.k for b in entry.bounds] == [2, 8]
        assert [e.k for e in entry.empirical] == [2, 8]
        assert entry.post_check is not None and entry.post_check.passed
        assert exit_code(report) == 0
        assert not post_check_failed(report)

    def test_same_seed_same_report(self):
        first = analyze("symmetric_walk", "x=1", ks=(2, 8), trials=300, seed=7)
        second = analyze("symmetric_walk", "x=1", ks=(2, 8), trials=300, seed=7)
        assert first.to_json() == second.to_json()
        assert json.loads(first.to_json())["schema"] == 1

    def test_second_loop_has_random_entry(self):
        report = analyze("two_phase", "x=1", ks=(2,), trials=0)
        first, second = report.loops
        assert first.entry == "deterministic" and first.init == {"x": 1, "y": 3}
        assert second.entry == "random" and not second.bounds
        assert exit_code(report) == 0

    def test_loop_not_entered(self):
        (entry,) = analyze("symmetric_walk", "x=0", trials=0).loops
        assert entry.entry == "not-entered"
        assert not entry.bounds

    def test_isqrt_walk_is_certified_on_a_box(self):
        report = analyze("isqrt_walk", "x=5", ks=(2,), trials=0)
        (entry,) = report.loops
        assert entry.method == "smap_general"
        assert entry.verdict == "AST_certified_on_box"
        assert entry.tail_class == "O(k^-1/6)"
        assert entry.bound_inputs.kind == "general"
        assert not entry.bounds[0].valid
        assert any("box" in note for note in entry.notes)
        assert exit_code(report) == 2

    def test_isqrt_walk_general_bound_series(self):
        report = analyze("isqrt_walk", "x=1", ks=(10 ** 6, 10 ** 9, 10 ** 12), trials=0)
        (entry,) = report.loops
        assert entry.method == "smap_general" and entry.zeta is None
        assert entry.bound_inputs.kind == "general"
        assert all(b.valid for b in entry.bounds)
        scaled = [b.bound * b.k ** (1 / 6) for b in entry.bounds]
        assert scaled == sorted(scaled, reverse=True)
        assert abs(scaled[1] - scaled[2]) < 0.1 * scaled[2]

    def test_branching_body_is_certified_on_the_default_box(self):
        text = (
            "pvar x;\nrvar r ~ table{-1:1/2, 1:1/2};\n"
            "while x >= 1 do if x >= 5 then x := x - 1 else x := x + r fi od\n"
        )
        report = analyze_program(normalize(parse(text)), {"x": 3}, ks=(2,), trials=0)
        (entry,) = report.loops
        assert entry.verdict == "AST_certified_on_box"
        assert entry.certificate.h == "x + 1"
        assert exit_code(report) == 2

    def test_geometric_walk_uses_a_progress_function(self):
        report = analyze("geometric_walk", "x=1", trials=0)
        (entry,) = report.loops
        assert entry.method == "clt_lpf"
        assert entry.certificate.kind == "lpf"
        assert entry.tail_class == "none" and not entry.bounds
        assert exit_code(report) == 0

    def test_biased_walk_is_inconclusive(self):
        report = analyze("biased_up_walk", "x=1", ks=(2,), trials=200)
        (entry,) = report.loops
        assert entry.method == "unknown" and entry.verdict == "inconclusive"
        assert entry.empirical and entry.post_check is None
        assert exit_code(report) == 3

    def test_user_certificate(self):
        norm = normalize(catalog.load("symmetric_walk"))
        user = SupermartingaleMap(parse_expr("2*x + 2", ("x",), rational=True), 2, 2)
        report = analyze_program(norm, {"x": 1}, ks=(4,), trials=0, user=user)
        (entry,) = report.loops
        assert entry.method == "user_certificate"
        assert (entry.delta, entry.zeta) == ("2", "2")
        assert entry.bound_inputs.e_x0 == "4"

    def test_frame(self):
        report = analyze("symmetric_walk", "x=1", ks=(2, 8), trials=200)
        frame = report_to_frame(report)
        assert list(frame.columns) == ["loop_id", "k", "bound", "valid", "estimate", "wilson95_lo", "wilson95_hi"]
        assert list(frame["k"]) == [2, 8]


class TestCertificateFile:

    def test_smap(self):
        cert = parse_certificate('{"kind": "smap", "h": "x + 1", "zeta": "1"}').to_certificate(("x",))
        assert cert.affine_form(("x",)) == ((1,), 1)
        assert (cert.delta, cert.zeta) == (1, 1)

    def test_lpf_vector(self):
        cert = parse_certificate('{"kind": "lpf", "a": ["-1", "1"], "c": "1/4"}').to_certificate(("x", "y"))
        assert cert == LinearProgressFunction((-1, 1), Fraction(1, 4))

    @pytest.mark.parametrize("text", [
        '{"kind": "smap", "h": "x", "extra": 1}',
        '{"kind": "smap", "h": "x", "zeta": "one"}',
        '{"kind": "ranking"}',
        "not json",
    ])
    def test_rejected_documents(self, text):
        with pytest.raises(CertificateFormatError):
            parse_certificate(text)

    @pytest.mark.parametrize("text", [
        '{"kind": "smap"}',
        '{"kind": "smap", "h": "z + 1"}',
        '{"kind": "lpf", "a": ["1"], "c": "0"}',
    ])
    def test_rejected_for_the_loop(self, text):
        with pytest.raises(CertificateFormatError):
            parse_certificate(text).to_certificate(("x", "y"))

    def test_from_certificate(self):
        smap = SupermartingaleMap.affine(("x",), (1,), 1, zeta=1)
        assert CertificateFile.from_certificate(smap, ("x",)).h == "x + 1"
        lpf = CertificateFile.from_certificate(LinearProgressFunction((-1, 1), Fraction(1, 4)), ("x", "y"))
        assert (lpf.h, lpf.a, lpf.c) == ("-x + y + 1/4", ["-1", "1"], "1/4")
