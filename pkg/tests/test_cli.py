import json
import math
import os
import subprocess
import sys

import pytest

from oscimax.cli import UsageError, main, parse_fn, parse_phase
from oscimax.phase import CurvedPowerSum, LaurentPoly, Quadratic, Separable, ZeroPhase
from oscimax.testfns import PiecewiseConstantFn, SmoothTestFn


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestGrammar:
    def test_phase_specs(self):
        assert isinstance(parse_phase("zero"), ZeroPhase)
        q = parse_phase("quadratic:2.5")
        assert isinstance(q, Quadratic) and q.coeff.const_value == 2.5
        lp = parse_phase("laurent:3")
        assert isinstance(lp, LaurentPoly) and lp.degree == 3
        lp2 = parse_phase("laurent:2=1,-1=0.25")
        assert lp2.has_negative_powers
        cv = parse_phase("curved:2.5")
        assert isinstance(cv, CurvedPowerSum) and cv.exponents == (2.5,)
        cv2 = parse_phase("curved:2=0.5,3.5=1")
        assert cv2.exponents == (2.0, 3.5)
        # monomial spelling is an alias, not a separate family
        alias = parse_phase("laurent:t^3")
        assert isinstance(alias, LaurentPoly) and alias.degree == 3
        assert not alias.has_negative_powers

    def test_fn_specs(self):
        f = parse_fn("char:1.5")
        assert isinstance(f, PiecewiseConstantFn)
        assert f(1.0) == 1.0 and f(1.6) == 0.0
        g = parse_fn("bump:0,1,2")
        assert isinstance(g, SmoothTestFn) and g(0.0) == 2.0
        a = parse_fn("atom:0.5")
        assert a.integral_abs(-1, 1) == pytest.approx(1.0)
        c1 = parse_fn("cex1:5")
        assert c1.breakpoints[-1] >= 25.0  # centers go out to k^2
        c2 = parse_fn("cex2:2")
        assert isinstance(c2, PiecewiseConstantFn)

    def test_json_file_specs(self, tmp_path):
        from oscimax.phase import phase_to_json

        pf = tmp_path / "phase.json"
        pf.write_text(json.dumps(phase_to_json(LaurentPoly.monomial(3))))
        lp = parse_phase(f"@{pf}")
        assert isinstance(lp, LaurentPoly) and lp.degree == 3

        ff = tmp_path / "fn.json"
        ff.write_text(json.dumps(parse_fn("char:2").to_json()))
        f = parse_fn(f"@{ff}")
        assert f(0.0) == 1.0

    @pytest.mark.parametrize("bad", [
        "laurent", "laurent:x", "curved:1.5", "quadratic:0", "mystery:1",
        "curved:3=0", "laurent:0",
    ])
    def test_bad_phase_rejected(self, bad):
        with pytest.raises((UsageError, ValueError)):
            parse_phase(bad)

    @pytest.mark.parametrize("bad", ["char", "char:-1", "bump:1", "cex0:3", ""])
    def test_bad_fn_rejected(self, bad):
        with pytest.raises((UsageError, ValueError)):
            parse_fn(bad)


class TestEval:
    def test_single_value_prints_bare(self, capsys):
        code, out, err = run_cli(
            ["eval", "--fn", "char:1", "--x", "3", "--r", "4"], capsys)
        assert code == 0
        assert out.strip() == "0.25"

    def test_csv_table_for_multiple(self, capsys):
        code, out, _ = run_cli(
            ["eval", "--fn", "char:1", "--x", "0,3", "--r", "4"], capsys)
        assert code == 0
        lines = [ln for ln in out.splitlines() if ln]
        assert lines[0].startswith("x,r,abs")
        assert len(lines) == 3

    def test_json_format(self, capsys):
        code, out, _ = run_cli(
            ["eval", "--fn", "char:1", "--x", "3", "--r", "4",
             "--format", "json"], capsys)
        rows = json.loads(out)
        assert rows[0]["abs"] == pytest.approx(0.25)
        assert rows[0]["err"] == 0.0

    def test_missing_flags_exit_2(self, capsys):
        code, _, err = run_cli(["eval", "--fn", "char:1"], capsys)
        assert code == 2
        assert err.startswith("oscimax-error:")


class TestMaximal:
    def test_zero_phase_row(self, capsys):
        code, out, _ = run_cli(
            ["maximal", "--fn", "char:1", "--x", "3"], capsys)
        assert code == 0
        lines = [ln for ln in out.splitlines() if ln]
        hdr = lines[0].split(",")
        row = dict(zip(hdr, lines[1].split(",")))
        assert float(row["value"]) == 0.25
        assert float(row["r_star"]) == 4.0
        assert row["case"] in ("A1", "A2", "A3", "A4_1", "A4_2")

    def test_json_cases(self, capsys):
        code, out, _ = run_cli(
            ["maximal", "--fn", "char:1", "--x", "0.5,3", "--phase",
             "quadratic:1", "--format", "json"], capsys)
        rows = json.loads(out)
        assert code == 0 and len(rows) == 2
        assert rows[0]["case"] == "A1"  # |x| below the cutoff

    def test_narrow_atom_cubic_lower_bound(self, capsys):
        # a narrow mean-one atom under a cubic monomial phase keeps
        # at least 1/(8x) of its mass at moderate x
        code, out, _ = run_cli(
            ["maximal", "--phase", "laurent:t^3", "--fn", "atom:0.001",
             "--x", "2", "--format", "json"], capsys)
        row = json.loads(out)[0]
        assert code == 0
        assert row["value"] >= 1.0 / 16.0 - row["err"]


class TestNorm:
    def test_norm_json(self, capsys):
        code, out, _ = run_cli(
            ["norm", "--fn", "bump:0,1,1", "--format", "json"], capsys)
        d = json.loads(out)
        assert code == 0
        assert d["l1"] == pytest.approx(16.0 / 15.0)
        assert d["cpl"] == pytest.approx(d["weighted_l1"] + d["lp_derivative"])

    def test_norm_step_undefined_derivative(self, capsys):
        code, out, _ = run_cli(
            ["norm", "--fn", "char:1", "--format", "json"], capsys)
        d = json.loads(out)
        assert d["lp_derivative"] == "undefined"


class TestExperimentCommand:
    def test_weights_exit_reflects_fail_rows(self, capsys):
        # the first log weight legitimately fails the tail check -> exit 1
        code, out, _ = run_cli(["experiment", "weights"], capsys)
        assert code == 1
        lines = [ln for ln in out.splitlines() if ln]
        assert lines[0].startswith("experiment,")
        hdr = lines[0].split(",")
        iw, ifl = hdr.index("weight"), hdr.index("flag")
        bad = {ln.split(",")[iw] for ln in lines[1:]
               if ln.split(",")[ifl] == "FAIL"}
        assert bad == {"psi_1"}

    def test_degree_and_betas_shorthand(self, capsys):
        code, out, _ = run_cli(
            ["experiment", "logbeta", "--d", "3", "--betas", "1e-1,1e-2"],
            capsys)
        assert code == 0
        lines = [ln for ln in out.splitlines() if ln]
        kinds = {ln.split(",")[2] for ln in lines[1:]}
        assert "pointwise" in kinds

    def test_degree_conflicts_with_phase(self, capsys):
        code, _, err = run_cli(
            ["experiment", "logbeta", "--d", "3", "--phase", "laurent:2"],
            capsys)
        assert code == 2 and "not both" in err

    def test_out_file_and_json_summary(self, tmp_path, capsys):
        dest = tmp_path / "d.csv"
        code, out, _ = run_cli(
            ["experiment", "decay", "--x", "2,4,8", "--out", str(dest)], capsys)
        assert code == 0 and out == ""
        text = dest.read_bytes().decode()
        assert text.count("\r\n") == text.count("\n")

        code, out, _ = run_cli(["experiment", "weights", "--format", "json"],
                               capsys)
        d = json.loads(out)
        assert d["experiment"] == "weight_admissibility"

    def test_unknown_experiment_exit_2(self, capsys):
        assert main(["experiment", "nonsense"]) == 2

    def test_worker_invariance_bytes(self, tmp_path):
        """Same CSV bytes at different worker counts, via the installed CLI."""
        outs = []
        for w in (1, 2):
            dest = tmp_path / f"d{w}.csv"
            cmd = [sys.executable, "-m", "oscimax.cli", "experiment", "decay",
                   "--x", "2,4,8,16", "--workers", str(w),
                   "--out", str(dest)]
            r = subprocess.run(cmd, capture_output=True, text=True)
            assert r.returncode == 0, r.stderr
            outs.append(dest.read_bytes())
        assert outs[0] == outs[1]

    def test_env_workers_respected(self, tmp_path):
        dest = tmp_path / "env.csv"
        env = dict(os.environ, OSCIMAX_WORKERS="3")
        cmd = [sys.executable, "-m", "oscimax.cli", "experiment", "decay",
               "--x", "2,4,8", "--out", str(dest)]
        r = subprocess.run(cmd, capture_output=True, text=True, env=env)
        assert r.returncode == 0, r.stderr
        assert dest.exists()


class TestErrorPaths:
    def test_domain_error_exit_2(self, capsys):
        # singular phase over a window containing the singularity
        code, _, err = run_cli(
            ["eval", "--fn", "char:1", "--x", "0", "--r", "1",
             "--phase", "laurent:2=1,-1=1"], capsys)
        assert code == 2
        assert err.startswith("oscimax-error:")

    def test_bad_float_exit_2(self, capsys):
        code, _, err = run_cli(
            ["eval", "--fn", "char:1", "--x", "abc", "--r", "1"], capsys)
        assert code == 2

    def test_unreadable_spec_file_exit_2(self, capsys):
        code, _, err = run_cli(
            ["norm", "--fn", "@/nonexistent/f.json"], capsys)
        assert code == 2
        assert "oscimax-error:" in err
