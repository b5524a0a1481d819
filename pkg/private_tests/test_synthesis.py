"""
Linear supermartingale maps and progress functions found by LP.
"""

from fractions import Fraction

import pytest

from astprove import catalog
from astprove.certificates import Box, SupermartingaleMap, Verdict, check_lpf, check_smap
from astprove.errors import NotIncremental, SupportTooLarge
from astprove.lang import load_loop
from astprove.synthesis import SIGN_CAP, NotFound, Synthesized, synth_lpf, synth_smap_linear

WIDE = """\
pvar x;
rvar r ~ uniform(-6..6);
while x >= 1 do
  x := x + r
od
"""

BRANCHING = """\
pvar x;
rvar r ~ table{-1:1/2, 1:1/2};
while x >= 1 do
  if x >= 5 then x := x - 1 else x := x + r fi
od
"""


def loop_of(name):
    return load_loop(catalog.source(name))


class TestSmapSynthesis:

    @pytest.mark.parametrize("name, a, c, zeta", [
        ("symmetric_walk", 1, 1, 1),
        ("countdown", 1, 1, 1),
        ("bounded_range_walk", 1, 2, 2),
    ])
    def test_finds_the_smallest_map(self, name, a, c, zeta):
        found = synth_smap_linear(loop_of(name))
        assert isinstance(found, Synthesized)
        assert found.verdict is Verdict.CERTIFIED
        cert = found.certificate
        assert cert.affine_form(("x",)) == ((Fraction(a),), Fraction(c))
        assert (cert.delta, cert.zeta) == (1, zeta)

    def test_sign_pattern_is_recorded(self, symmetric_walk):
        assert synth_smap_linear(symmetric_walk).signs == (-1, 1)

    @pytest.mark.parametrize("name", ["biased_up_walk", "drift_positive"])
    def test_nonterminating_drift_is_infeasible(self, name):
        found = synth_smap_linear(loop_of(name))
        assert isinstance(found, NotFound) and found.reason == "infeasible"

    def test_infinite_support(self, geometric_walk):
        assert synth_smap_linear(geometric_walk).reason == "infinite-support"

    def test_support_cap(self):
        with pytest.raises(SupportTooLarge) as info:
            synth_smap_linear(load_loop(WIDE))
        assert (info.value.size, info.value.cap) == (13, SIGN_CAP)

    def test_non_affine_guard_needs_a_box(self, parabola_walk):
        assert synth_smap_linear(parabola_walk).reason == "symbolic-unsupported"

    def test_non_incremental_needs_a_box(self, isqrt_walk):
        with pytest.raises(NotIncremental):
            synth_smap_linear(isqrt_walk)

    def test_isqrt_walk_on_a_box(self, isqrt_walk):
        found = synth_smap_linear(isqrt_walk, Box.uniform(("x",), -50, 50))
        assert isinstance(found, Synthesized)
        assert found.verdict is Verdict.CERTIFIED_ON_BOX
        assert found.certificate.affine_form(("x",)) == ((Fraction(1),), Fraction(1))
        assert found.certificate.zeta is None

    def test_branching_body_on_a_box(self):
        loop = load_loop(BRANCHING)
        assert not loop.is_incremental
        box = Box.uniform(("x",), -1000, 1000)
        found = synth_smap_linear(loop, box)
        assert isinstance(found, Synthesized)
        assert found.verdict is Verdict.CERTIFIED_ON_BOX
        assert found.certificate.affine_form(("x",)) == ((Fraction(1),), Fraction(1))
        assert check_smap(loop, found.certificate, box).verdict is Verdict.CERTIFIED_ON_BOX


class TestLpfSynthesis:

    def test_geometric_walk(self, geometric_walk):
        found = synth_lpf(geometric_walk)
        assert isinstance(found, Synthesized)
        assert (found.certificate.a, found.certificate.c) == ((1,), 0)

    def test_deterministic_body_has_no_spread(self):
        assert synth_lpf(loop_of("drift_positive")).reason == "infeasible"

    def test_positive_drift_is_infeasible(self):
        assert synth_lpf(loop_of("biased_up_walk")).reason == "infeasible"

    def test_non_affine_guard(self, parabola_walk):
        assert synth_lpf(parabola_walk).reason == "symbolic-unsupported"

    def test_requires_an_incremental_body(self, isqrt_walk):
        with pytest.raises(NotIncremental):
            synth_lpf(isqrt_walk)


class TestClosure:

    @pytest.mark.parametrize("name", ["symmetric_walk", "countdown", "bounded_range_walk", "geometric_walk"])
    def test_synthesized_certificates_recheck(self, name):
        loop = loop_of(name)
        for synth in (synth_smap_linear, synth_lpf):
            found = synth(loop)
            if not isinstance(found, Synthesized):
                continue
            cert = found.certificate
            report = check_smap(loop, cert) if isinstance(cert, SupermartingaleMap) else check_lpf(loop, cert)
            assert report.verdict is Verdict.CERTIFIED
            assert report.verdict is found.verdict
