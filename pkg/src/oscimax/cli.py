"""Command line front end.

Four subcommands: ``eval`` (one windowed average), ``maximal`` (radius
search at given points), ``norm`` (norm report for a test function) and
``experiment`` (a named reproduction run).  Inline grammar for the two
object flags:

  --fn     atom:BETA | char:BETA | bump:CENTER,SCALE,HEIGHT |
           cex1:K | cex2:N | @file.json
  --phase  zero | quadratic:A | laurent:P | laurent:P=C,P=C |
           curved:D | curved:D=C,D=C | @file.json
           (laurent powers also accept the spelling t^P)

Exit codes: 0 success, 1 an experiment produced FAIL rows, 2 bad
configuration or input.  Errors are one line on stderr prefixed with
``oscimax-error:``.  All file output is atomic and deterministic: the same
command produces byte-identical files at any --workers value.
"""

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from .errors import PhaseDomainError, PreconditionError
from .experiments import (
    ExperimentReport,
    exp_case_census,
    exp_counterexample_divergence,
    exp_decay_remark,
    exp_logbeta_growth,
    exp_positive_bound,
    exp_weight_admissibility,
)
from .maximal import SearchConfig, classify_case, m_cut_auto, maximal_value
from .norms import norm_report
from .oscquad import average
from .phase import (
    Coeff,
    CurvedPowerSum,
    LaurentPoly,
    Quadratic,
    ZeroPhase,
    phase_from_json,
)
from .testfns import (
    atom_fbeta,
    char_fn,
    counterexample_part1,
    counterexample_part2,
    fn_from_json,
    smooth_bump,
)


class UsageError(Exception):
    pass


# default reproduction setups; the Python API is the full knob surface
DEFAULT_BETAS = (1e-2, 10 ** -2.5, 1e-3, 10 ** -3.5, 1e-4, 10 ** -4.5)
EXPERIMENTS = ("logbeta", "decay", "cex1", "cex2", "positive", "census", "weights")


def _parse_floats(text: str):
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}")


def _load_json_arg(spec: str):
    path = spec[1:]
    try:
        with open(path, "r") as fh:
            return json.load(fh)
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e}")
    except json.JSONDecodeError as e:
        raise UsageError(f"bad JSON in {path}: {e}")


def parse_phase(spec: str):
    spec = spec.strip()
    if spec.startswith("@"):
        return phase_from_json(_load_json_arg(spec))
    if spec == "zero":
        return ZeroPhase()
    head, _, rest = spec.partition(":")
    if head == "quadratic":
        a = float(rest) if rest else 1.0
        if a == 0.0:
            raise UsageError("quadratic coefficient must be nonzero")
        return Quadratic(coeff=Coeff.constant(a), inv_sup=1.0 / abs(a))
    if head == "laurent":
        if not rest:
            raise UsageError("laurent needs a power, e.g. laurent:3")
        coeffs = {}
        for tok in rest.split(","):
            p_txt, _, c_txt = tok.partition("=")
            if p_txt.startswith("t^"):  # monomial shorthand: laurent:t^3
                p_txt = p_txt[2:]
            try:
                p = int(p_txt)
                c = float(c_txt) if c_txt else 1.0
            except ValueError:
                raise UsageError(f"bad laurent term {tok!r}")
            coeffs[p] = Coeff.constant(c)
        degree = max(abs(p) for p in coeffs)
        return LaurentPoly(degree=degree, coeffs=coeffs)
    if head == "curved":
        if not rest:
            raise UsageError("curved needs an exponent, e.g. curved:2.5")
        exps, cs = [], []
        for tok in rest.split(","):
            d_txt, _, c_txt = tok.partition("=")
            try:
                exps.append(float(d_txt))
                cs.append(float(c_txt) if c_txt else 1.0)
            except ValueError:
                raise UsageError(f"bad curved term {tok!r}")
        if cs[-1] == 0.0:
            raise UsageError("top curved coefficient must be nonzero")
        return CurvedPowerSum(
            coeffs=tuple(Coeff.constant(c) for c in cs),
            exponents=tuple(exps),
            top_inv_sup=1.0 / abs(cs[-1]),
        )
    raise UsageError(f"unknown phase spec {spec!r}")


def parse_fn(spec: str):
    spec = spec.strip()
    if spec.startswith("@"):
        return fn_from_json(_load_json_arg(spec))
    head, _, rest = spec.partition(":")
    try:
        if head == "atom":
            return atom_fbeta(float(rest))
        if head == "char":
            return char_fn(float(rest))
        if head == "bump":
            vals = _parse_floats(rest)
            if len(vals) != 3:
                raise UsageError("bump wants center,scale,height")
            return smooth_bump(*vals)
        if head == "cex1":
            return counterexample_part1(int(rest or 100))[0]
        if head == "cex2":
            return counterexample_part2(int(rest or 4))[0]
    except (ValueError, PreconditionError) as e:
        raise UsageError(f"bad fn spec {spec!r}: {e}")
    raise UsageError(f"unknown fn spec {spec!r}")


def _cex_count(spec, default: int) -> int:
    if not spec:
        return default
    _, _, rest = spec.partition(":")
    try:
        return int(rest) if rest else default
    except ValueError:
        raise UsageError(f"bad count in {spec!r}")


def _atomic_write_text(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".oscimax-", suffix=".tmp", dir=d)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _emit(text: str, out) -> None:
    if out:
        _atomic_write_text(out, text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _rows_csv(columns, rows) -> str:
    from .experiments import _fmt_cell  # same 17-digit cell format as reports
    import csv as _csv

    buf = []

    class _Sink:
        def write(self, s):
            buf.append(s)

    w = _csv.writer(_Sink(), lineterminator="\r\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt_cell(v) for v in row])
    return "".join(buf)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="oscimax", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("eval", "maximal", "norm", "experiment"):
        p = sub.add_parser(name)
        if name == "experiment":
            p.add_argument("name", choices=EXPERIMENTS)
            p.add_argument("--betas", default=None, help="comma-separated betas (logbeta)")
            p.add_argument("--d", type=int, default=None,
                           help="monomial degree shorthand, same as --phase laurent:D")
        p.add_argument("--phase", default=None)
        p.add_argument("--fn", default=None)
        p.add_argument("--x", default=None, help="comma-separated points")
        p.add_argument("--r", default=None, help="comma-separated radii")
        p.add_argument("--out", default=None)
        p.add_argument("--format", default="csv", choices=("csv", "json"))
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--epsilon", type=float, default=0.5)
        p.add_argument("--seed", type=int, default=0)
    return ap


def _search_config(ns) -> SearchConfig:
    kw = {"epsilon": ns.epsilon}
    if ns.tol is not None:
        kw["quad_tol"] = ns.tol
    return SearchConfig(**kw)


def _cmd_eval(ns) -> int:
    if ns.fn is None or ns.x is None or ns.r is None:
        raise UsageError("eval needs --fn, --x and --r")
    f = parse_fn(ns.fn)
    phase = parse_phase(ns.phase or "zero")
    xs = _parse_floats(ns.x)
    rs = _parse_floats(ns.r)
    rows = []
    for x in xs:
        for r in rs:
            q = average(f, phase, x, r, tol=ns.tol)
            rows.append((x, r, abs(q.value), q.value.real, q.value.imag,
                         q.abs_error_estimate))
    if ns.format == "json":
        payload = [{"x": a, "r": b, "abs": c, "re": d, "im": e, "err": g}
                   for a, b, c, d, e, g in rows]
        _emit(json.dumps(payload, indent=2, sort_keys=True), ns.out)
    elif len(rows) == 1 and not ns.out:
        print("%.17g" % rows[0][2])
    else:
        _emit(_rows_csv(("x", "r", "abs", "re", "im", "err"), rows), ns.out)
    return 0


def _cmd_maximal(ns) -> int:
    if ns.fn is None or ns.x is None:
        raise UsageError("maximal needs --fn and --x")
    f = parse_fn(ns.fn)
    phase = parse_phase(ns.phase or "zero")
    cfg = _search_config(ns)
    m_cut = m_cut_auto(phase)
    rows = []
    for x in _parse_floats(ns.x):
        s = maximal_value(f, phase, x, cfg)
        rows.append((s.x, s.value, s.r_star, s.r_half, s.err,
                     classify_case(s, m_cut, ns.epsilon)))
    if ns.format == "json":
        payload = [{"x": a, "value": b, "r_star": c, "r_half": d, "err": e,
                    "case": lab} for a, b, c, d, e, lab in rows]
        _emit(json.dumps(payload, indent=2, sort_keys=True), ns.out)
    else:
        _emit(_rows_csv(("x", "value", "r_star", "r_half", "err", "case"), rows),
              ns.out)
    return 0


def _cmd_norm(ns) -> int:
    if ns.fn is None:
        raise UsageError("norm needs --fn")
    f = parse_fn(ns.fn)
    rep = norm_report(f)
    if ns.format == "json":
        _emit(json.dumps(rep.to_json(), indent=2, sort_keys=True), ns.out)
    else:
        d = rep.to_json()
        keys = [k for k in d if k != "methods"]
        _emit(_rows_csv(tuple(keys), [tuple(d[k] for k in keys)]), ns.out)
    return 0


def _default_census_grid():
    core = np.linspace(-8.0, 8.0, 81)
    wings = np.geomspace(8.0, 120.0, 20)
    return np.unique(np.concatenate([core, wings, -wings]))


def _cmd_experiment(ns) -> int:
    cfg = _search_config(ns)
    name = ns.name
    if ns.d is not None:
        if ns.phase is not None:
            raise UsageError("give either --d or --phase, not both")
        ns.phase = f"laurent:{ns.d}"
    if name == "logbeta":
        phase = parse_phase(ns.phase or "laurent:3")
        betas = _parse_floats(ns.betas) if ns.betas else list(DEFAULT_BETAS)
        rep = exp_logbeta_growth(phase, betas, workers=ns.workers,
                                 search=cfg)
    elif name == "decay":
        phase_spec = ns.phase or "laurent:2"
        phase = parse_phase(phase_spec)
        if isinstance(phase, LaurentPoly):
            k = float(phase.degree)
        elif isinstance(phase, CurvedPowerSum):
            k = float(phase.exponents[-1])
        elif isinstance(phase, Quadratic):
            k = 2.0
        else:
            raise UsageError("decay wants a power phase")
        beta = 0.5
        if ns.fn:
            ff = parse_fn(ns.fn)
            try:
                beta = float(ff.breakpoints[-1])
            except AttributeError:
                raise UsageError("decay wants a char: fn")
        xs = _parse_floats(ns.x) if ns.x else list(np.geomspace(2.0, 100.0, 30))
        rep = exp_decay_remark(k, beta, xs, workers=ns.workers, search=cfg)
    elif name == "cex1":
        rep = exp_counterexample_divergence("part1", _cex_count(ns.fn, 100),
                                            workers=ns.workers, search=cfg)
    elif name == "cex2":
        rep = exp_counterexample_divergence("part2", _cex_count(ns.fn, 4),
                                            workers=ns.workers, search=cfg)
    elif name == "positive":
        f = parse_fn(ns.fn or "bump:0,1,1")
        phase = parse_phase(ns.phase or "quadratic:1")
        x_max = _parse_floats(ns.x)[0] if ns.x else 40.0
        rep = exp_positive_bound(f, phase, ns.epsilon, x_max,
                                 workers=ns.workers, search=cfg)
    elif name == "census":
        f = parse_fn(ns.fn or "bump:0,1,1")
        phase = parse_phase(ns.phase or "quadratic:1")
        grid = _parse_floats(ns.x) if ns.x else _default_census_grid()
        rep = exp_case_census(f, phase, ns.epsilon, grid, workers=ns.workers,
                              search=cfg)
    elif name == "weights":
        rep = exp_weight_admissibility()
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown experiment {name!r}")

    if ns.format == "json":
        _emit(json.dumps(rep.to_json_summary(), indent=2, sort_keys=True), ns.out)
    else:
        if ns.out:
            rep.to_csv(ns.out)
        else:
            sys.stdout.write(rep.csv_text())
    return 1 if rep.failed else 0


def main(argv=None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage problems already; normalize other codes
        return 2 if e.code not in (0,) else 0
    if ns.workers is not None and ns.workers < 1:
        print("oscimax-error: --workers must be >= 1", file=sys.stderr)
        return 2
    try:
        if ns.command == "eval":
            return _cmd_eval(ns)
        if ns.command == "maximal":
            return _cmd_maximal(ns)
        if ns.command == "norm":
            return _cmd_norm(ns)
        if ns.command == "experiment":
            return _cmd_experiment(ns)
        raise UsageError(f"unknown command {ns.command!r}")
    except (UsageError, PreconditionError, PhaseDomainError, ValueError, OSError) as e:
        print(f"oscimax-error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
