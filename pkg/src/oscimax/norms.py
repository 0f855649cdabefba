"""Norm functionals, the exact sliding-average oracle, and weight checks.

Step functions get exact breakpoint arithmetic everywhere: weighted L^1 via
per-cell antiderivatives of |t|^l, the L log L functional cell by cell, and
the absolute-value maximal function by enumerating the finitely many radii
where a window edge meets a breakpoint (the windowed mass is piecewise
linear in r, so the average is monotone between those radii and the sup is
attained at one of them or in the r -> 0 limit).

Polynomial bumps get closed forms where they exist (integer-weight moments,
L^p and derivative norms via beta-function identities) and short fixed-order
Gauss panels otherwise.
"""

import math
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from .errors import PreconditionError
from .testfns import PiecewiseConstantFn, SmoothTestFn

__all__ = [
    "NormReport",
    "norm_report",
    "weighted_l1",
    "llogl_norm",
    "lp_derivative",
    "cpl_norm",
    "lq_norm",
    "hl_maximal_exact",
    "hl_maximal",
    "check_embedding_q",
    "check_llogl_lemma",
    "weight_admissibility",
    "WeightReport",
    "psi_weight",
    "power_weight",
]

UNDEFINED = "undefined"

# fixed Gauss-Legendre panel (used where no closed form exists)
_GL_N = 96
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_N)


def _gl_integral(fn, a: float, b: float) -> float:
    if b <= a:
        return 0.0
    mid, hl = 0.5 * (a + b), 0.5 * (b - a)
    return float(hl * np.sum(_GL_W * fn(mid + hl * _GL_X)))


def _abs_pow_antideriv(t, l: float):
    # antiderivative of |t|^l, odd in t
    return np.sign(t) * np.abs(t) ** (l + 1.0) / (l + 1.0)


def weighted_l1(f, l: float) -> float:
    """Integral of (1 + |t|^l) |f(t)| dt.

    Exact for step functions and for bumps with integer l; Gauss panels
    (split at 0) otherwise.
    """
    if l < 0:
        raise PreconditionError("l must be >= 0")
    if isinstance(f, PiecewiseConstantFn):
        bp = f.breakpoints
        plain = np.diff(bp)
        powered = _abs_pow_antideriv(bp[1:], l) - _abs_pow_antideriv(bp[:-1], l)
        return float(np.sum(np.abs(f.values) * (plain + powered)))
    if isinstance(f, SmoothTestFn):
        return f.l1 + _abs_moment_bump(f, l)
    raise TypeError(f"unsupported function type: {f!r}")


def _abs_moment_bump(f: SmoothTestFn, l: float) -> float:
    """Integral of |t|^l |f(t)| dt for a polynomial bump."""
    c, s, h = f.center, f.scale, abs(f.height)
    a, b = c - s, c + s
    if float(l).is_integer():
        li = int(l)
        X = Polynomial([0.0, 1.0])
        W = (1.0 - ((X - c) / s) ** 2) ** 2
        Q = (W * X ** li).integ()
        total = 0.0
        for p, q, sgn in ((a, min(b, 0.0), (-1.0) ** li), (max(a, 0.0), b, 1.0)):
            if q > p:
                total += sgn * (Q(q) - Q(p))
        return h * total
    fn = lambda t: np.abs(t) ** l * np.abs(f.value(t))
    return _gl_integral(fn, a, min(b, 0.0)) + _gl_integral(fn, max(a, 0.0), b)


def llogl_norm(f) -> float:
    """Integral of |f| log(e + |f|); exact per cell for step functions."""
    if isinstance(f, PiecewiseConstantFn):
        v = np.abs(f.values)
        return float(np.sum(v * np.log(math.e + v) * np.diff(f.breakpoints)))
    if isinstance(f, SmoothTestFn):
        a, b = f.support_interval
        fn = lambda t: np.abs(f.value(t)) * np.log(math.e + np.abs(f.value(t)))
        mid = 0.5 * (a + b)
        return _gl_integral(fn, a, mid) + _gl_integral(fn, mid, b)
    raise TypeError(f"unsupported function type: {f!r}")


def lp_derivative(f, p):
    """||f'||_p, or the string "undefined" for step functions (their
    distributional derivative is atomic, deliberately outside the smooth
    classes)."""
    if isinstance(f, PiecewiseConstantFn):
        return UNDEFINED
    if isinstance(f, SmoothTestFn):
        return f.deriv_lp_norm(p)
    raise TypeError(f"unsupported function type: {f!r}")


def lq_norm(f, q) -> float:
    """||f||_q, exact for both families."""
    if isinstance(f, PiecewiseConstantFn):
        if q == math.inf:
            return f.sup_norm
        return float(np.sum(np.abs(f.values) ** q * np.diff(f.breakpoints)) ** (1.0 / q))
    if isinstance(f, SmoothTestFn):
        return f.lp_norm(q)
    raise TypeError(f"unsupported function type: {f!r}")


def cpl_norm(f, p, l):
    """||(1+|x|^l) f||_1 + ||f'||_p, or "undefined" if the derivative is."""
    d = lp_derivative(f, p)
    if d == UNDEFINED:
        return UNDEFINED
    return weighted_l1(f, l) + d


@dataclass(frozen=True)
class NormReport:
    l1: float
    weighted_l1: float
    lp_derivative: object          # float or "undefined"
    llogl: float
    cpl: object                    # float or "undefined"
    p: float
    l: float
    methods: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "l1": self.l1,
            "weighted_l1": self.weighted_l1,
            "lp_derivative": self.lp_derivative,
            "llogl": self.llogl,
            "cpl": self.cpl,
            "p": self.p,
            "l": self.l,
            "methods": self.methods,
        }


def norm_report(f, p: float = 2.0, l: float = 0.0) -> NormReport:
    exact_w = isinstance(f, PiecewiseConstantFn) or float(l).is_integer()
    methods = {
        "weighted_l1": "exact" if exact_w else "quadrature",
        "llogl": "exact" if isinstance(f, PiecewiseConstantFn) else "quadrature",
        "lp_derivative": "exact",
    }
    return NormReport(
        l1=f.l1,
        weighted_l1=weighted_l1(f, l),
        lp_derivative=lp_derivative(f, p),
        llogl=llogl_norm(f),
        cpl=cpl_norm(f, p, l),
        p=p,
        l=l,
        methods=methods,
    )


# ---------------------------------------------------------------------------
# the absolute-value maximal oracle

def hl_maximal_exact(f: PiecewiseConstantFn, x: float) -> float:
    """Exact sup over r > 0 of the windowed average of |f| around x.

    The windowed mass r -> int_{x-r}^{x+r} |f| is piecewise linear with
    nodes exactly where x - r or x + r hits a breakpoint, and (c1 + c2 r)/2r
    is monotone between nodes, so the sup is attained at a node radius or in
    the r -> 0 limit (the local value of |f|).
    """
    if not isinstance(f, PiecewiseConstantFn):
        raise PreconditionError("exact oracle needs a step function")
    bp = f.breakpoints
    cands = np.unique(np.abs(x - bp))
    cands = cands[cands > 0.0]
    best = 0.0
    if cands.size:
        avg = f.integral_abs(x - cands, x + cands) / (2.0 * cands)
        best = float(np.max(avg))
    # r -> 0: mean of the two one-sided values of |f|
    i = int(np.searchsorted(bp, x, side="right")) - 1
    right = abs(float(f.values[i])) if 0 <= i < f.values.size else 0.0
    if 0 <= i < bp.size and x == bp[i]:
        left = abs(float(f.values[i - 1])) if i >= 1 else 0.0
        limit = 0.5 * (left + right)
    else:
        limit = right
    return max(best, limit)


def hl_maximal(f, x: float) -> float:
    """Windowed-average maximal function: exact for steps, numeric for bumps."""
    if isinstance(f, PiecewiseConstantFn):
        return hl_maximal_exact(f, x)
    if not isinstance(f, SmoothTestFn):
        raise TypeError(f"unsupported function type: {f!r}")
    a, b = f.support_interval
    r_hi = max(abs(x - a), abs(x - b))
    if r_hi <= 0:
        return abs(f.value(x))
    rs = np.geomspace(max(1e-9 * (1.0 + abs(x)), 1e-12), r_hi, 512)
    avg = (f.mass_cdf(x + rs) - f.mass_cdf(x - rs)) / (2.0 * rs)
    k = int(np.argmax(avg))
    lo = rs[max(0, k - 1)]
    hi = rs[min(rs.size - 1, k + 1)]
    # golden-section polish on the bracketing interval
    gr = 0.5 * (math.sqrt(5.0) - 1.0)
    c1, c2 = hi - gr * (hi - lo), lo + gr * (hi - lo)
    for _ in range(40):
        f1 = (f.mass_cdf(x + c1) - f.mass_cdf(x - c1)) / (2.0 * c1)
        f2 = (f.mass_cdf(x + c2) - f.mass_cdf(x - c2)) / (2.0 * c2)
        if f1 < f2:
            lo, c1 = c1, c2
            c2 = lo + gr * (hi - lo)
        else:
            hi, c2 = c2, c1
            c1 = hi - gr * (hi - lo)
    r = 0.5 * (lo + hi)
    val = (f.mass_cdf(x + r) - f.mass_cdf(x - r)) / (2.0 * r)
    best = max(float(np.max(avg)), float(val), abs(f.value(x)))
    # averages of |f| cannot exceed its sup; trims roundoff at tiny radii
    return min(best, abs(f.height))


# ---------------------------------------------------------------------------
# lemma checks

EmbeddingCheck = namedtuple("EmbeddingCheck", "lhs rhs passed")
LoglogCheck = namedtuple("LoglogCheck", "lhs rhs passed min_c")


def check_embedding_q(f: SmoothTestFn, p: float, q: float) -> EmbeddingCheck:
    """||f||_q <= 2 (||2f||_1-style weight at l=0 plus ||f'||_p)."""
    if not isinstance(f, SmoothTestFn):
        raise PreconditionError("embedding check needs a differentiable member")
    lhs = lq_norm(f, q)
    rhs = 2.0 * cpl_norm(f, p, 0.0)
    return EmbeddingCheck(lhs, rhs, bool(lhs <= rhs + 1e-12 * (1.0 + abs(rhs))))


def check_llogl_lemma(f, S_bounds, C_test: float, n_grid: int = 1201) -> LoglogCheck:
    """Windowed-maximal mass over a finite S against |S| + C * L log L.

    lhs integrates the maximal function over S on a uniform grid
    (trapezoid); rhs = |S| + C_test * llogl_norm(f).  min_c is the smallest
    constant that would have worked for this f and S.
    """
    s_lo, s_hi = float(S_bounds[0]), float(S_bounds[1])
    if not s_hi > s_lo:
        raise PreconditionError("S must have positive length")
    xs = np.linspace(s_lo, s_hi, n_grid)
    mf = np.array([hl_maximal(f, float(t)) for t in xs])
    lhs = float(np.trapezoid(mf, xs))
    lll = llogl_norm(f)
    rhs = (s_hi - s_lo) + C_test * lll
    min_c = max(0.0, (lhs - (s_hi - s_lo)) / lll) if lll > 0 else 0.0
    return LoglogCheck(lhs, rhs, bool(lhs <= rhs), min_c)


# ---------------------------------------------------------------------------
# weight admissibility

@dataclass(frozen=True)
class WeightReport:
    lower_const: float          # inf phi/(1+|x|) over the probe grid
    lower_ok: bool
    doubling_sup: float         # sup phi(2x)/phi(x)
    doubling_ok: bool
    tail_blocks: tuple          # dyadic block integrals of 1/phi
    tail_slope: float           # d log I_k / d log k over the late blocks
    tail_converges: bool
    passed: bool
    notes: str = ""

    def to_json(self) -> dict:
        d = self.__dict__.copy()
        d["tail_blocks"] = list(self.tail_blocks)
        return d


def weight_admissibility(phi, R_probe: float = 1.0, x_max: float = 1e6,
                         doubling_cap: float = 16.0, slope_margin: float = 0.1) -> WeightReport:
    """Probe the three admissibility conditions for a weight phi >= 1.

    (i) phi(x) dominates 1+|x| up to a constant: report inf phi/(1+|x|).
    (ii) doubling: report sup phi(2x)/phi(x) on the grid; heuristic cap.
    (iii) integrable tail of 1/phi: dyadic block integrals I_k over
    [2^k R, 2^{k+1} R] (both signs); the series sum I_k converges iff I_k
    decays faster than 1/k, tested by the log-log slope of the late blocks
    against -1 - margin.  Report-only: no exceptions, witnesses included.
    """
    lin = np.linspace(0.0, 2.0, 257)
    logg = np.geomspace(1.0, x_max, 1025)
    grid = np.unique(np.concatenate([lin, logg, -lin, -logg]))
    ph = np.asarray(phi(grid), dtype=float)
    lower = ph / (1.0 + np.abs(grid))
    lower_const = float(np.min(lower))
    lower_ok = bool(lower_const > 0.0)

    ratio = np.asarray(phi(2.0 * grid), dtype=float) / ph
    doubling_sup = float(np.max(ratio))
    doubling_ok = bool(doubling_sup <= doubling_cap)

    K = int(math.floor(math.log2(x_max / R_probe)))
    blocks = []
    inv = lambda t: 1.0 / np.asarray(phi(t), dtype=float)
    for k in range(K):
        a, b = R_probe * 2.0 ** k, R_probe * 2.0 ** (k + 1)
        blocks.append(_gl_integral(inv, a, b) + _gl_integral(inv, -b, -a))
    blocks = np.asarray(blocks)
    late = slice(max(1, K // 2), K)
    ks = np.arange(1, K + 1, dtype=float)
    slope, _ = np.polyfit(np.log(ks[late]), np.log(np.maximum(blocks[late], 1e-300)), 1)
    tail_converges = bool(slope < -1.0 - slope_margin)

    notes = []
    if not lower_ok:
        notes.append("phi fails to dominate 1+|x|")
    if not doubling_ok:
        notes.append(f"doubling ratio {doubling_sup:.3g} above cap {doubling_cap:g}")
    if not tail_converges:
        notes.append(f"dyadic tail blocks decay like k^{slope:.2f}: partial sums not Cauchy")
    return WeightReport(
        lower_const=lower_const,
        lower_ok=lower_ok,
        doubling_sup=doubling_sup,
        doubling_ok=doubling_ok,
        tail_blocks=tuple(float(b) for b in blocks),
        tail_slope=float(slope),
        tail_converges=tail_converges,
        passed=bool(lower_ok and doubling_ok and tail_converges),
        notes="; ".join(notes),
    )


def psi_weight(m: int):
    """1 + |x| log^m |x| outside the unit interval, 1 inside."""

    def phi(x):
        ax = np.abs(np.asarray(x, dtype=float))
        out = np.where(ax >= 1.0, 1.0 + ax * np.log(np.maximum(ax, 1.0)) ** m, 1.0)
        return out if np.ndim(x) else float(out)

    phi.__name__ = f"psi_{m}"
    return phi


def power_weight(p: float):
    def phi(x):
        ax = np.abs(np.asarray(x, dtype=float))
        out = 1.0 + ax ** p
        return out if np.ndim(x) else float(out)

    phi.__name__ = f"power_{p}"
    return phi
