import math
import os

import numpy as np
import pytest

from oscimax.errors import PreconditionError
from oscimax.experiments import (
    FAIL,
    INCONCLUSIVE,
    INFO,
    PASS,
    SKIPPED,
    ExperimentReport,
    _config_hash,
    _flag,
    _tail_envelope_params,
    _tail_mass,
    exp_case_census,
    exp_counterexample_divergence,
    exp_decay_remark,
    exp_logbeta_growth,
    exp_positive_bound,
    exp_weight_admissibility,
)
from oscimax.maximal import SearchConfig, m_cut_auto, maximal_value
from oscimax.phase import CurvedPowerSum, LaurentPoly, Quadratic
from oscimax.testfns import smooth_bump


def tiny_report():
    rep = ExperimentReport(
        experiment="demo",
        columns=("experiment", "kind", "x", "measured", "bound", "margin",
                 "err", "flag", "config"),
        config={"alpha": 1, "beta": [1, 2]},
    )
    rep.add_row(kind="pointwise", x=1.0, measured=0.5, bound=1.0,
                margin=0.5, err=1e-3, flag=PASS)
    rep.add_row(kind="pointwise", x=2.0, measured=2.0, bound=1.0,
                margin=-1.0, err=1e-3, flag=FAIL)
    return rep


class TestReportPlumbing:
    def test_flag_thresholds(self):
        assert _flag(0.1, 0.01) == PASS
        assert _flag(-0.1, 0.01) == FAIL
        assert _flag(0.005, 0.01) == INCONCLUSIVE
        assert _flag(-0.005, 0.01) == INCONCLUSIVE

    def test_add_row_rejects_unknown_columns(self):
        rep = tiny_report()
        with pytest.raises(ValueError):
            rep.add_row(kind="pointwise", nonsense=1)

    def test_autofill_experiment_and_config(self):
        rep = tiny_report()
        assert set(rep.column("experiment")) == {"demo"}
        assert set(rep.column("config")) == {rep.config_hash}

    def test_pass_counts_and_failed(self):
        rep = tiny_report()
        assert rep.pass_counts == {PASS: 1, FAIL: 1}
        assert rep.failed

    def test_csv_shape(self):
        text = tiny_report().csv_text()
        lines = text.split("\r\n")
        assert lines[0] == "experiment,kind,x,measured,bound,margin,err,flag,config"
        assert len([ln for ln in lines if ln]) == 3
        # floats serialized as %.17g round-trip exactly
        cell = lines[1].split(",")[3]
        assert float(cell) == 0.5
        assert text.endswith("\r\n")

    def test_to_csv_atomic(self, tmp_path):
        rep = tiny_report()
        dest = tmp_path / "out.csv"
        rep.to_csv(str(dest))
        assert dest.read_bytes().decode("utf-8") == rep.csv_text()
        leftovers = [p for p in os.listdir(tmp_path) if p.startswith(".oscimax-")]
        assert not leftovers

    def test_json_summary(self):
        d = tiny_report().to_json_summary()
        assert d["rows"] == 2 and d["experiment"] == "demo"
        assert d["pass_counts"][FAIL] == 1

    def test_config_hash_stable_and_sensitive(self):
        a = _config_hash({"x": 1, "y": 2})
        b = _config_hash({"y": 2, "x": 1})
        c = _config_hash({"x": 1, "y": 3})
        assert a == b
        assert a != c
        assert len(a) == 12 and all(ch in "0123456789abcdef" for ch in a)


FAST = SearchConfig(err_rel_goal=0.2, refine_passes=3, points_per_decade=32)


class TestExperimentRuns:
    def test_logbeta_quick(self):
        rep = exp_logbeta_growth(LaurentPoly.monomial(3), (1e-2, 1e-3),
                                 n_x=4, search=FAST)
        assert not rep.failed
        kinds = set(rep.column("kind"))
        assert "pointwise" in kinds and "window_integral" in kinds
        assert rep.pass_counts.get(PASS, 0) >= 4

    def test_logbeta_validates_betas(self):
        with pytest.raises(PreconditionError):
            exp_logbeta_growth(LaurentPoly.monomial(3), (1e-3, 1e-2), n_x=4)
        with pytest.raises(PreconditionError):
            exp_logbeta_growth(LaurentPoly.monomial(3), (0.5,), n_x=4)

    def test_decay_quick(self):
        xs = np.geomspace(2.0, 20.0, 5)
        rep = exp_decay_remark(2.0, 0.5, xs, search=FAST)
        assert not rep.failed
        tail_rows = rep.rows_of_kind("tail_block")
        assert len(tail_rows) == 12
        geo = rep.rows_of_kind("tail_geometric")
        assert len(geo) == 1

    def test_decay_skips_small_x(self):
        rep = exp_decay_remark(2.0, 0.5, [0.1, 3.0], search=FAST)
        flags = rep.column("flag")
        assert SKIPPED in flags

    def test_cex1_quick(self):
        rep = exp_counterexample_divergence("part1", 5, n_x=3, search=FAST)
        assert not rep.failed
        h1 = rep.rows_of_kind("h1_partial")
        assert len(h1) == 1 and h1[0][rep.columns.index("flag")] == PASS

    def test_cex2_quick(self):
        rep = exp_counterexample_divergence("part2", 2, n_x=3, search=FAST)
        assert not rep.failed
        assert rep.rows_of_kind("mass_total")

    def test_cex_variant_validation(self):
        with pytest.raises(PreconditionError):
            exp_counterexample_divergence("part3", 5)
        with pytest.raises(PreconditionError):
            exp_counterexample_divergence("part1", 0)

    def test_census_quick(self):
        f = smooth_bump(0.0, 1.0, 1.0)
        grid = np.linspace(-6.0, 6.0, 25)
        rep = exp_case_census(f, Quadratic.unit(), 0.5, grid, search=FAST)
        assert not rep.failed
        kinds = set(rep.column("kind"))
        assert {"pointwise", "set_measure", "a3_measure_bound"} <= kinds
        # per-label measures tile the window exactly
        i = rep.columns.index("measured")
        total = sum(r[i] for r in rep.rows_of_kind("set_measure"))
        assert math.isclose(total, 12.0, rel_tol=1e-12)

    def test_positive_quick(self):
        f = smooth_bump(0.0, 1.0, 1.0)
        rep = exp_positive_bound(f, Quadratic.unit(), 0.5, 12.0,
                                 search=SearchConfig(err_rel_goal=0.3,
                                                     refine_passes=2))
        assert not rep.failed
        stats = rep.fit_stats
        assert stats["ratio_spread"] >= 1.0
        assert not any(f == "DIVERGENT" for f in rep.column("flag"))

    def test_weights_quick(self):
        rep = exp_weight_admissibility(x_max=1e4)
        kinds = rep.column("kind")
        assert kinds.count("admissible") == 2


class TestDeterminism:
    def test_worker_count_invariance(self):
        a = exp_logbeta_growth(LaurentPoly.monomial(3), (1e-2, 1e-3),
                               n_x=4, workers=1, search=FAST)
        b = exp_logbeta_growth(LaurentPoly.monomial(3), (1e-2, 1e-3),
                               n_x=4, workers=3, search=FAST)
        assert a.csv_text() == b.csv_text()

    def test_env_worker_override(self, monkeypatch):
        monkeypatch.setenv("OSCIMAX_WORKERS", "2")
        rep = exp_decay_remark(2.0, 0.5, np.geomspace(2.0, 10.0, 4), search=FAST)
        ref = exp_decay_remark(2.0, 0.5, np.geomspace(2.0, 10.0, 4), workers=1,
                               search=FAST)
        assert rep.csv_text() == ref.csv_text()

    def test_repeat_run_byte_identical(self):
        f = smooth_bump(0.0, 1.0, 1.0)
        grid = np.linspace(-4.0, 4.0, 13)
        a = exp_case_census(f, Quadratic.unit(), 0.5, grid, search=FAST)
        b = exp_case_census(f, Quadratic.unit(), 0.5, grid, search=FAST)
        assert a.csv_text() == b.csv_text()


class TestTailEnvelope:
    def test_params_for_supported_families(self):
        dm, lead_low, w2 = _tail_envelope_params(CurvedPowerSum.single(2.5, 2.0))
        assert dm == 2.5 and lead_low == pytest.approx(2.0)
        assert w2 == pytest.approx(2.0 * 2.5 * 1.5)
        dm, lead_low, w2 = _tail_envelope_params(Quadratic.unit())
        assert dm == 2.0 and lead_low == 1.0

    def test_envelope_dominates_measured_average(self):
        """The per-point integrand behind _tail_mass caps the measured value:
        value(x) <= coef_a y^-dm + coef_b y^-dm-1 with y = |x| - S."""
        f = smooth_bump(0.0, 1.0, 1.0)
        phase = Quadratic.unit()
        dm, lead_low, w2 = _tail_envelope_params(phase)
        S = f.support_radius
        fp = f.deriv_lp_norm(2.0)
        width = 2.0 * S
        coef_a = (2.0 * f.sup_norm + fp * math.sqrt(width)) / (dm * lead_low)
        coef_b = 2.0 * w2 * f.l1 / (dm * lead_low) ** 2
        for x in (3.0, 5.0, 9.0):
            y = x - S
            cap = coef_a * y ** (-dm) + coef_b * y ** (-dm - 1.0)
            s = maximal_value(f, phase, x, FAST)
            assert s.value - s.err <= cap + 1e-9, x

    def test_tail_mass_positive_and_decreasing(self):
        f = smooth_bump(0.0, 1.0, 1.0)
        phase = CurvedPowerSum.single(2.5, 1.0)
        m1 = _tail_mass(phase, f, 2.0, 10.0, 1.0)
        m2 = _tail_mass(phase, f, 2.0, 20.0, 1.0)
        assert m1 > m2 > 0.0
