import math

import numpy as np
import pytest

from oscimax.errors import PreconditionError
from oscimax.maximal import (
    CASE_LABELS,
    MaximalSample,
    SearchConfig,
    classify_case,
    classify_case_detail,
    m_cut_auto,
    maximal_value,
    radius_function,
)
from oscimax.norms import hl_maximal, hl_maximal_exact
from oscimax.phase import (
    Coeff,
    CurvedPowerSum,
    LaurentPoly,
    Quadratic,
    Separable,
    ZeroPhase,
)
from oscimax.testfns import atom_fbeta, char_fn, random_step_corpus, smooth_bump

PHASES = [
    ZeroPhase(),
    Quadratic.unit(),
    LaurentPoly.monomial(3),
    CurvedPowerSum.single(2.5, 1.0),
    Separable.from_exprs("cos(x)", 1.0, "x * x"),
]
PHASE_IDS = ["zero", "quadratic", "cubic", "curved", "separable"]


class TestZeroPhaseExact:
    def test_char_away_from_support(self):
        # sup over r of the window mass of chi_[-1,1] seen from x = 3:
        # best window is [-1, 7] (r = 4), average 2 / 8 = 1/4
        s = maximal_value(char_fn(1.0), ZeroPhase(), 3.0)
        assert s.value == 0.25
        assert s.r_star == 4.0
        assert s.err == 0.0
        assert abs(s.r_half - 8.0 / 3.0) < 1e-6

    def test_char_at_center(self):
        s = maximal_value(char_fn(1.0), ZeroPhase(), 0.0)
        assert s.value == 1.0
        assert s.err == 0.0
        # value stays 1 down to the smallest probed radius
        assert s.r_half == pytest.approx(1e-4)

    def test_matches_hl_exact_on_corpus(self):
        for i, f in enumerate(random_step_corpus(12, 7)):
            for x in (-4.0, -0.5, 0.3, 2.0, 9.0):
                s = maximal_value(f, ZeroPhase(), x)
                want = hl_maximal_exact(f, x)
                assert abs(s.value - want) <= max(s.err, 1e-9), (i, x)

    def test_force_general_agrees(self):
        f = char_fn(1.0)
        exact = maximal_value(f, ZeroPhase(), 3.0)
        general = maximal_value(f, ZeroPhase(), 3.0,
                                SearchConfig(force_general=True))
        assert abs(general.value - exact.value) <= general.err + 1e-9


class TestDomination:
    @pytest.mark.parametrize("phase", PHASES[1:], ids=PHASE_IDS[1:])
    def test_never_exceeds_hl(self, phase):
        """|M_g f| <= M f pointwise (phase factor has modulus one)."""
        for f in random_step_corpus(4, 11, nonnegative=False):
            for x in (-3.0, 0.25, 1.5, 6.0):
                s = maximal_value(f, phase, x)
                cap = hl_maximal_exact(f, x)
                assert s.value <= cap + s.err + 1e-9

    def test_bump_domination(self):
        f = smooth_bump(0.0, 1.0, 2.0)
        for x in (0.0, 0.7, 2.5):
            s = maximal_value(f, Quadratic.unit(), x)
            assert s.value <= hl_maximal(f, x) + s.err + 1e-7


class TestSearchBehavior:
    def test_err_goal_respected_generic(self):
        f = char_fn(1.0)
        s = maximal_value(f, Quadratic.unit(), 0.5)
        assert s.err <= SearchConfig().err_rel_goal * s.value + 1e-12
        assert s.value > 0

    def test_value_at_reported_radius(self):
        """r_star reproduces the reported value when averaged directly."""
        from oscimax.oscquad import average

        f = atom_fbeta(0.7)
        s = maximal_value(f, CurvedPowerSum.single(2.5, 1.0), 0.4)
        got = abs(average(f, CurvedPowerSum.single(2.5, 1.0), 0.4, s.r_star).value)
        assert got >= s.value - s.err - 1e-9

    def test_tighter_config_does_not_drop(self):
        f = char_fn(1.0)
        phase = Quadratic.unit()
        loose = maximal_value(f, phase, 0.8,
                              SearchConfig(err_rel_goal=0.2, refine_passes=2))
        tight = maximal_value(f, phase, 0.8,
                              SearchConfig(err_rel_goal=0.02, refine_passes=8))
        assert tight.value >= loose.value - loose.err - 1e-9
        assert tight.err <= loose.err + 1e-12

    def test_translation_covariance_x_independent_phase(self):
        # for g = g(x - t) everything is translation covariant
        f = char_fn(1.0)
        phase = LaurentPoly.monomial(2)
        a = maximal_value(f, phase, 1.3)
        b = maximal_value(f.translate(10.0), phase, 11.3)
        assert abs(a.value - b.value) <= a.err + b.err + 1e-9
        assert abs(a.r_star - b.r_star) <= 0.05 * max(a.r_star, b.r_star) + 1e-6

    def test_zero_function(self):
        f = char_fn(1.0).scale_values(0.0)
        s = maximal_value(f, Quadratic.unit(), 0.3)
        assert s.value == 0.0 and s.err == 0.0

    def test_sublinearity(self):
        from oscimax.testfns import PiecewiseConstantFn

        fs = random_step_corpus(2, 23, nonnegative=False)
        f, g = fs[0], fs[1].translate(1.0)
        # pointwise sum as a step function over the merged breakpoints
        bks = np.unique(np.concatenate([f.breakpoints, g.breakpoints]))
        mids = 0.5 * (bks[:-1] + bks[1:])
        h = PiecewiseConstantFn(list(bks), [float(f(m) + g(m)) for m in mids])
        phase = Quadratic.unit()
        for x in (-1.0, 0.5, 3.0):
            sf = maximal_value(f, phase, x)
            sg = maximal_value(g, phase, x)
            sh = maximal_value(h, phase, x)
            assert sh.value <= sf.value + sg.value + sf.err + sg.err + sh.err + 1e-9


class TestRadiusFunction:
    def test_below_r_star_and_consistent(self):
        f = char_fn(1.0)
        s = maximal_value(f, ZeroPhase(), 3.0)
        rh = radius_function(f, ZeroPhase(), 3.0, s)
        assert rh <= s.r_star
        assert abs(rh - s.r_half) < 1e-6

    def test_monotone_in_distance_zero_phase(self):
        # farther from the support needs a bigger window to reach half level
        f = char_fn(1.0)
        vals = []
        for x in (2.0, 3.0, 5.0, 9.0):
            s = maximal_value(f, ZeroPhase(), x)
            vals.append(s.r_half)
        assert all(b > a for a, b in zip(vals, vals[1:]))


class TestClassify:
    def mk(self, x, value, r_half, err=0.0):
        return MaximalSample(x=x, value=value, r_star=max(r_half, 1.0),
                             r_half=r_half, err=err)

    def test_labels(self):
        eps = 0.5
        assert classify_case(self.mk(0.5, 1.0, 0.1), 1.0, eps) == "A1"
        # |x| > M_cut, small r_half, small value -> A2
        s = self.mk(4.0, 4.0 ** -1.6, 1.0)
        assert classify_case(s, 1.0, eps) == "A2"
        # small r_half, large value -> A3
        s = self.mk(4.0, 0.9, 1.0)
        assert classify_case(s, 1.0, eps) == "A3"
        # huge r_half -> A4_1
        s = self.mk(4.0, 0.9, 9.0)
        assert classify_case(s, 1.0, eps) == "A4_1"
        # intermediate r_half -> A4_2
        s = self.mk(4.0, 0.9, 3.0)
        assert classify_case(s, 1.0, eps) == "A4_2"
        for lbl in ("A1", "A2", "A3", "A4_1", "A4_2"):
            assert lbl in CASE_LABELS

    def test_tie_flags(self):
        eps = 0.5
        lbl, tie = classify_case_detail(self.mk(1.0, 0.5, 0.2), 1.0, eps)
        assert lbl == "A1" and tie
        lbl, tie = classify_case_detail(self.mk(4.0, 0.9, 2.0), 1.0, eps)
        assert lbl == "A3" and tie  # r_half == |x| / 2 exactly
        lbl, tie = classify_case_detail(self.mk(4.0, 0.9, 8.0), 1.0, eps)
        assert lbl == "A4_1" and tie

    def test_preconditions(self):
        with pytest.raises(PreconditionError):
            classify_case(self.mk(1.0, 1.0, 1.0), 0.5, 0.5)
        with pytest.raises(PreconditionError):
            classify_case(self.mk(1.0, 1.0, 1.0), 1.0, 1.5)


class TestMcutAuto:
    def test_single_term_is_one(self):
        assert m_cut_auto(CurvedPowerSum.single(2.5, 1.0)) == 1.0
        assert m_cut_auto(Quadratic.unit()) == 1.0
        assert m_cut_auto(LaurentPoly.monomial(3)) == 1.0

    def test_two_term_dominance(self):
        phase = CurvedPowerSum(
            coeffs=(Coeff.constant(0.5), Coeff.constant(1.0)),
            exponents=(2.0, 3.5),
            top_inv_sup=1.0,
        )
        M = m_cut_auto(phase)
        assert M >= 1.0
        # criterion restated: top slope beats twice the rest at M
        dm, dj = 3.5, 2.0
        lhs = dm * 1.0 * M ** (dm - 1.0)
        rhs = 2.0 * dj * 0.5 * M ** (dj - 1.0)
        assert lhs >= rhs * (1.0 - 1e-12)

    def test_laurent_mixed(self):
        phase = LaurentPoly(3, {3: Coeff.constant(1.0), 1: Coeff.constant(4.0)})
        M = m_cut_auto(phase)
        assert 3.0 * M ** 2 >= 2.0 * 4.0 * (1.0 - 1e-12)


class TestConfigRoundTrip:
    def test_json_round_trip(self):
        cfg = SearchConfig(err_rel_goal=0.01, refine_passes=3, epsilon=0.25)
        d = cfg.to_json()
        back = SearchConfig.from_json(d)
        assert back == cfg

    def test_unknown_key_rejected(self):
        with pytest.raises(PreconditionError):
            SearchConfig.from_json({"r_min_scale": 1e-4, "bogus": 1})

    def test_validation(self):
        with pytest.raises(PreconditionError):
            SearchConfig(half_level=0.0)
        with pytest.raises(PreconditionError):
            SearchConfig(m_cut=0.5)


class TestSampleShape:
    @pytest.mark.parametrize("phase", PHASES, ids=PHASE_IDS)
    def test_fields_sane(self, phase):
        f = char_fn(1.0)
        s = maximal_value(f, phase, 1.7)
        assert s.r_half <= s.r_star * (1.0 + 1e-12)
        assert s.value >= 0 and s.err >= 0
        assert math.isfinite(s.value) and math.isfinite(s.r_star)
        d = s.to_json()
        assert set(d) == {"x", "value", "r_star", "r_half", "err", "case_label"}
