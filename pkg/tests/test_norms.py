import math

import numpy as np
import pytest
from scipy.integrate import quad

from oscimax.errors import PreconditionError
from oscimax.norms import (
    UNDEFINED,
    check_embedding_q,
    check_llogl_lemma,
    cpl_norm,
    hl_maximal,
    hl_maximal_exact,
    llogl_norm,
    lp_derivative,
    lq_norm,
    norm_report,
    power_weight,
    psi_weight,
    weight_admissibility,
    weighted_l1,
)
from oscimax.testfns import (
    PiecewiseConstantFn,
    atom_fbeta,
    char_fn,
    random_step_corpus,
    smooth_bump,
)


class TestWeightedL1:
    def test_char_unit_weight(self):
        # int_0^1 (1 + t) dt over chi_[0,1]: 1 + 1/2
        f = PiecewiseConstantFn([0.0, 1.0], [1.0])
        assert abs(weighted_l1(f, 1.0) - 1.5) < 1e-15

    def test_step_matches_quad(self):
        f = PiecewiseConstantFn([-2.0, -0.5, 1.0, 3.0], [1.0, -2.0, 0.5])
        for l in (0.0, 1.0, 1.5, 2.0):
            want, _ = quad(lambda t: abs(f(t)) * (1 + abs(t) ** l), -2.0, 3.0,
                           points=[-0.5, 0.0, 1.0], limit=200)
            assert abs(weighted_l1(f, l) - want) < 1e-10, l

    def test_bump_matches_quad(self):
        f = smooth_bump(1.0, 2.0, 1.3)
        for l in (0.0, 1.0, 1.5, 3.0):
            want, _ = quad(lambda t: abs(f(t)) * (1 + abs(t) ** l), -1.0, 3.0,
                           points=[0.0], limit=200)
            assert abs(weighted_l1(f, l) - want) < 1e-9, l

    def test_monotone_in_weight_for_far_support(self):
        # with support in |t| >= 1 the weight grows with l
        f = char_fn(1.0).translate(3.0)
        vals = [weighted_l1(f, l) for l in (0.0, 0.5, 1.0, 2.0)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_l_zero_is_twice_l1(self):
        f = atom_fbeta(0.7)
        assert abs(weighted_l1(f, 0.0) - 2.0 * f.l1) < 1e-14


class TestLlogl:
    def test_tall_thin_spike(self):
        # 100 on [0, 0.01]: mass 1, llogl = log(e + 100)
        f = PiecewiseConstantFn([0.0, 0.01], [100.0])
        assert abs(llogl_norm(f) - math.log(math.e + 100.0)) < 1e-14

    def test_unit_char(self):
        f = char_fn(0.5)
        assert abs(llogl_norm(f) - math.log(math.e + 1.0)) < 1e-15

    def test_bump_matches_quad(self):
        f = smooth_bump(0.0, 1.5, 2.0)
        want, _ = quad(lambda t: abs(f(t)) * math.log(math.e + abs(f(t))),
                       -1.5, 1.5, limit=200)
        assert abs(llogl_norm(f) - want) < 1e-8

    def test_height_scaling_superlinear(self):
        f = char_fn(1.0)
        one = llogl_norm(f)
        ten = llogl_norm(f.scale_values(10.0))
        assert ten > 10.0 * one


class TestLpAndCpl:
    def test_step_derivative_undefined(self):
        f = char_fn(1.0)
        assert lp_derivative(f, 2.0) == UNDEFINED
        assert cpl_norm(f, 2.0, 1.0) == UNDEFINED

    def test_bump_cpl_combines(self):
        f = smooth_bump(0.0, 1.0, 1.0)
        got = cpl_norm(f, 2.0, 1.5)
        assert abs(got - (weighted_l1(f, 1.5) + f.deriv_lp_norm(2.0))) < 1e-14

    def test_lq_step(self):
        f = PiecewiseConstantFn([0.0, 1.0, 2.0], [3.0, -1.0])
        assert abs(lq_norm(f, 2.0) - math.sqrt(10.0)) < 1e-14
        assert lq_norm(f, math.inf) == 3.0

    def test_norm_report_fields(self):
        rep = norm_report(smooth_bump(0.0, 1.0, 1.0), p=2.0, l=1.5)
        d = rep.to_json()
        assert d["cpl"] == pytest.approx(d["weighted_l1"] + d["lp_derivative"])
        rep2 = norm_report(char_fn(1.0))
        assert rep2.lp_derivative == UNDEFINED and rep2.cpl == UNDEFINED


class TestHlMaximal:
    def test_char_examples(self):
        f = char_fn(1.0)
        assert hl_maximal_exact(f, 0.0) == 1.0
        assert abs(hl_maximal_exact(f, 3.0) - 0.25) < 1e-15

    def test_exact_beats_dense_grid(self):
        rng = np.random.default_rng(5)
        for f in random_step_corpus(8, 17, nonnegative=False):
            for x in rng.uniform(-12, 12, 6):
                got = hl_maximal_exact(f, float(x))
                rs = np.geomspace(1e-4, 50.0, 4000)
                brute = max(
                    abs(f.integral_abs(x - r, x + r)) / (2 * r) for r in rs
                )
                assert got >= brute - 1e-9
                assert got <= brute * 1.02 + 1e-9

    def test_atom_at_origin(self):
        # unit absolute mass over [-beta, beta] means height 1 / (2 beta)
        f = atom_fbeta(1.0)
        got = hl_maximal_exact(f, 0.0)
        assert abs(got - 0.5) < 1e-12

    def test_bump_maximal(self):
        f = smooth_bump(0.0, 1.0, 2.0)
        assert abs(hl_maximal(f, 0.0) - 2.0) < 1e-9
        # far field: bracketed by full-mass averages at r = x -+ 1
        x = 40.0
        got = hl_maximal(f, x)
        assert got >= f.l1 / (2 * (x + 1.0)) - 1e-12
        assert got <= f.l1 / (2 * (x - 1.0))

    def test_domination_by_sup(self):
        for f in random_step_corpus(5, 29, nonnegative=False):
            for x in (-3.0, 0.0, 2.5):
                assert hl_maximal_exact(f, x) <= f.sup_norm + 1e-12


class TestLemmaChecks:
    def test_embedding_on_bumps(self):
        for f in [smooth_bump(0.0, 1.0, 1.0), smooth_bump(2.0, 0.5, 3.0)]:
            for q in (1.0, 2.0, math.inf):
                chk = check_embedding_q(f, 2.0, q)
                assert chk.passed, (f, q, chk)

    def test_embedding_rejects_steps(self):
        with pytest.raises(PreconditionError):
            check_embedding_q(char_fn(1.0), 2.0, 2.0)

    def test_llogl_lemma_char(self):
        # lhs below |S| already, so the break-even constant clamps at 0
        f = char_fn(1.0)
        chk = check_llogl_lemma(f, (-4.0, 4.0), 10.0, n_grid=401)
        assert chk.passed
        assert chk.min_c == 0.0

    def test_llogl_lemma_spike(self):
        # tall spike: maximal tail 1/(2|x|) makes lhs beat |S|
        f = PiecewiseConstantFn([0.0, 0.01], [100.0])
        chk = check_llogl_lemma(f, (-1.0, 1.0), 10.0, n_grid=801)
        assert chk.passed
        assert chk.min_c > 0.0
        # min_c really is the break-even constant
        assert chk.lhs == pytest.approx(2.0 + chk.min_c * llogl_norm(f), rel=1e-12)

    def test_llogl_lemma_needs_length(self):
        with pytest.raises(PreconditionError):
            check_llogl_lemma(char_fn(1.0), (1.0, 1.0), 10.0)


class TestWeights:
    def test_psi_values(self):
        # 1 + |x| log^m |x| past the unit interval, constant 1 inside
        w1 = psi_weight(1)
        w2 = psi_weight(2)
        x = 10.0
        assert w1(x) == pytest.approx(1.0 + x * math.log(x))
        assert w2(x) == pytest.approx(1.0 + x * math.log(x) ** 2)
        assert w1(0.5) == 1.0 and w2(-0.3) == 1.0
        assert w1(-x) == w1(x)

    def test_power_weight(self):
        w = power_weight(1.5)
        assert w(8.0) == pytest.approx(1.0 + 8.0 ** 1.5)
        assert w(-8.0) == w(8.0)

    def test_psi2_admissible(self):
        rep = weight_admissibility(psi_weight(2), x_max=1e6)
        assert rep.passed
        assert rep.lower_ok and rep.doubling_ok and rep.tail_converges
        assert rep.doubling_sup <= 16.0
        assert rep.tail_slope < -1.1

    def test_psi1_tail_divergent(self):
        rep = weight_admissibility(psi_weight(1), x_max=1e6)
        assert not rep.passed
        assert rep.lower_ok and rep.doubling_ok
        assert not rep.tail_converges
        # slope hugs -1: the dyadic blocks are a harmonic-like series
        assert -1.1 < rep.tail_slope < -0.9

    def test_power_weight_admissible(self):
        rep = weight_admissibility(power_weight(1.5), x_max=1e5)
        assert rep.passed
