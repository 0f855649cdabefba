"""Search for the oscillatory sliding-average supremum over window radii.

The sup over r > 0 of |windowed average| is approximated on an explicit
node set: a log backbone, every radius at which a window edge meets a
support breakpoint, and extra nodes where an edge sweeps through the
support fast enough for the phase to turn.  A chunked cumulative sweep
evaluates each integral increment exactly once, gaps that could still
hide a larger value are subdivided adaptively, and a golden-section
polish runs around the top grid maxima.

The reported err is honest rather than optimistic.  On a gap [r1, r2]
the window integral obeys |dI/dr| <= |f(x+r)| + |f(x-r)| (the phase
factor has modulus one), so the unseen sup is bounded by a one-sided
Lipschitz extension from the left node, capped by the trivial mass
bound.  Node placement makes both caps exact per gap: window edges
cross no breakpoint inside a gap, so the edge bound is constant there.

Two lossless cuts keep the sweep finite: beyond the support-covering
radius the integral is constant while 1/2r decays, and once the trivial
bound ||f||_1 / 2r falls under the running best, no larger radius can
win.
"""

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .oscquad import average, integral_increments
from .phase import CurvedPowerSum, LaurentPoly, ZeroPhase, dt_abs_sup
from .testfns import PiecewiseConstantFn, SmoothTestFn

__all__ = ["SearchConfig", "MaximalSample", "maximal_value", "radius_function",
           "classify_case", "classify_case_detail", "m_cut_auto", "CASE_LABELS"]

CASE_LABELS = ("A1", "A2", "A3", "A4_1", "A4_2", "unclassified")

_QUARTER = 0.5 * math.pi


@dataclass(frozen=True)
class SearchConfig:
    """Knobs for the radius search; defaults suit every bundled experiment."""

    r_min_scale: float = 1e-4
    points_per_decade: int = 64
    refine_top_k: int = 5          # golden-polish candidates
    refine_passes: int = 6
    refine_factor: int = 8
    refine_max_gaps: int = 512     # per pass
    err_rel_goal: float = 0.05     # stop refining once gap slack <= goal * value
    golden_iters: int = 16
    half_bisect_iters: int = 26
    quad_tol: float = 1e-8
    epsilon: float = 0.5
    m_cut: object = "auto"         # "auto" or a number >= 1
    half_level: float = 0.5        # the level defining r_half
    force_general: bool = False    # disable the exact zero-phase shortcut
    chunk_radii: int = 512
    fine_per_cell: int = 8
    fine_cap: int = 64

    def __post_init__(self):
        if not (self.r_min_scale > 0 and self.points_per_decade >= 2):
            raise PreconditionError("bad grid parameters")
        if not (0 < self.half_level <= 1):
            raise PreconditionError("half_level must lie in (0, 1]")
        if self.m_cut != "auto" and not float(self.m_cut) >= 1:
            raise PreconditionError("m_cut must be 'auto' or >= 1")

    @staticmethod
    def from_json(d: dict) -> "SearchConfig":
        known = {f.name for f in dataclasses.fields(SearchConfig)}
        bad = set(d) - known
        if bad:
            raise PreconditionError(f"unknown search config keys: {sorted(bad)}")
        return SearchConfig(**d)

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class MaximalSample:
    x: float
    value: float
    r_star: float
    r_half: float
    err: float
    case_label: str = "unclassified"

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


# ---------------------------------------------------------------------------
# support geometry helpers

def _support_bounds(f):
    if isinstance(f, (PiecewiseConstantFn, SmoothTestFn)):
        return f.support_interval
    raise PreconditionError("need compact support: pass a step function or a bump")


def _nonzero_cells(f):
    if isinstance(f, PiecewiseConstantFn):
        bp, v = f.breakpoints, f.values
        return [(float(bp[i]), float(bp[i + 1])) for i in range(v.size) if v[i] != 0.0]
    s0, s1 = f.support_interval
    return [(s0, s1)]


def _edge_radii(f, x: float):
    if isinstance(f, PiecewiseConstantFn):
        pts = f.breakpoints
    else:
        s0, s1 = f.support_interval
        pts = np.array([s0, f.center, s1])  # center radius keeps |f| monotone per gap
    return np.abs(x - pts)


def _interval_abs_max(f, a: float, b: float) -> float:
    """sup of |f| over [a, b], exact per family."""
    if b < a:
        a, b = b, a
    if isinstance(f, PiecewiseConstantFn):
        bp, v = f.breakpoints, f.values
        if b <= bp[0] or a >= bp[-1] or v.size == 0:
            return 0.0
        i0 = max(int(np.searchsorted(bp, a, side="right")) - 1, 0)
        i1 = min(int(np.searchsorted(bp, b, side="left")), v.size)
        if i1 <= i0:
            i1 = i0 + 1
        return float(np.max(np.abs(v[i0:i1])))
    s0, s1 = f.support_interval
    lo, hi = max(a, s0), min(b, s1)
    if hi < lo:
        return 0.0
    return abs(f.value(min(max(f.center, lo), hi)))


def _limit_value(f, x: float) -> float:
    """|average| in the r -> 0 limit (phase factor drops out in modulus)."""
    if isinstance(f, PiecewiseConstantFn):
        bp, v = f.breakpoints, f.values
        i = int(np.searchsorted(bp, x, side="right")) - 1
        right = float(v[i]) if 0 <= i < v.size else 0.0
        if 0 <= i < bp.size and x == bp[i]:
            left = float(v[i - 1]) if i >= 1 else 0.0
            return abs(0.5 * (left + right))
        return abs(right)
    return abs(f.value(x))


def _abs_mass(f, a, b):
    return f.integral_abs(a, b)


# ---------------------------------------------------------------------------
# node construction

def _build_radii(f, phase, x: float, cfg: SearchConfig):
    s_lo, s_hi = _support_bounds(f)
    dist = max(s_lo - x, x - s_hi, 0.0)
    r_min = cfg.r_min_scale * (1.0 + dist)
    s_rad = max(abs(s_lo), abs(s_hi))
    r_cover = max(abs(x - s_lo), abs(x - s_hi))
    r_max = max(2.0 * (abs(x) + s_rad), r_cover * (1.0 + 1e-9), 2.0 * r_min)

    n_bb = max(2, int(math.ceil(cfg.points_per_decade * math.log10(r_max / r_min))) + 1)
    parts = [np.geomspace(r_min, r_max, n_bb), _edge_radii(f, x)]

    for p, q in _nonzero_cells(f):
        slope = dt_abs_sup(phase, x, x - q, x - p)
        width = q - p
        if math.isfinite(slope):
            n = int(np.clip(math.ceil(width * slope / _QUARTER), cfg.fine_per_cell, cfg.fine_cap))
        else:
            n = cfg.fine_per_cell
        for lo, hi in ((p - x, q - x), (x - q, x - p)):
            hi = min(hi, r_max)
            lo = max(lo, 0.0)
            if hi > 0.0 and hi > lo:
                parts.append(np.linspace(max(lo, 1e-300), hi, n + 1))

    # a representative tiny radius so the r -> 0 limit is a real node
    if _limit_value(f, x) > 0.0:
        slope0 = dt_abs_sup(phase, x, -0.5 * r_min, 0.5 * r_min)
        if math.isfinite(slope0):
            parts.append(np.array([min(0.5 * r_min, 0.02 / max(slope0, 1e-12))]))

    radii = np.unique(np.concatenate(parts))
    radii = radii[(radii > 0.0) & (radii <= r_max)]
    if radii.size < 2:
        radii = np.array([r_min, r_max])
    return radii, r_min, r_cover


# ---------------------------------------------------------------------------
# cumulative sweep

def _sweep(f, phase, x: float, radii, seed_best: float, cfg: SearchConfig):
    """Evaluate I(r) at every node, ascending, pruning hopeless radii."""
    m_total = f.l1
    best = seed_best
    I_parts, q_parts = [], []
    anchor_r = None
    anchor_I = 0j
    anchor_q = 0.0
    n_done = 0
    pruned_next = None
    while n_done < radii.size:
        chunk = radii[n_done:n_done + cfg.chunk_radii]
        m = chunk.size
        if anchor_r is None:
            bounds = np.concatenate([x - chunk[::-1], x + chunk])
            vals, errs = integral_increments(f, phase, x, bounds)
            inc = vals[:m - 1][::-1] + vals[m:]
            einc = errs[:m - 1][::-1] + errs[m:]
            I = vals[m - 1] + np.concatenate([[0.0], np.cumsum(inc)])
            qe = errs[m - 1] + np.concatenate([[0.0], np.cumsum(einc)])
        else:
            bl = np.concatenate([x - chunk[::-1], [x - anchor_r]])
            br = np.concatenate([[x + anchor_r], x + chunk])
            vl, el = integral_increments(f, phase, x, bl)
            vr, er = integral_increments(f, phase, x, br)
            I = anchor_I + np.cumsum(vl[::-1] + vr)
            qe = anchor_q + np.cumsum(el[::-1] + er)
        I_parts.append(I)
        q_parts.append(qe)
        avg = np.abs(I) / (2.0 * chunk)
        k = int(np.argmax(avg))
        best = max(best, float(avg[k] - qe[k] / (2.0 * chunk[k])))
        anchor_r, anchor_I, anchor_q = float(chunk[-1]), complex(I[-1]), float(qe[-1])
        n_done += m
        if n_done < radii.size and best > 0 and m_total / (2.0 * radii[n_done]) < best:
            pruned_next = float(radii[n_done])
            break
    r = radii[:n_done]
    return r, np.concatenate(I_parts), np.concatenate(q_parts), pruned_next, m_total


def _gap_potentials(f, x: float, r, I, qe):
    """Per-gap upper bound for the unseen sup of |average|."""
    if r.size < 2:
        return np.zeros(0)
    num = np.abs(I) + qe
    gaps = r[1:] - r[:-1]
    if isinstance(f, PiecewiseConstantFn):
        rm = 0.5 * (r[:-1] + r[1:])
        E = np.abs(f(x + rm)) + np.abs(f(x - rm))
    else:
        R = np.abs(f.value(x + r))
        L = np.abs(f.value(x - r))
        E = np.maximum(R[:-1], R[1:]) + np.maximum(L[:-1], L[1:])
    lip = np.maximum(num[:-1] / (2.0 * r[:-1]),
                     (num[:-1] + gaps * E) / (2.0 * r[1:]))
    triv = _abs_mass(f, x - r[1:], x + r[1:]) / (2.0 * r[:-1])
    return np.minimum(lip, triv)


def _refine(f, phase, x: float, r, I, qe, cfg: SearchConfig):
    """Subdivide the gaps that could still hide a larger value."""
    for _ in range(cfg.refine_passes):
        avg = np.abs(I) / (2.0 * r)
        value = float(np.max(avg))
        pot = _gap_potentials(f, x, r, I, qe)
        goal = value + max(cfg.err_rel_goal * value, 1e-300)
        hot = np.flatnonzero(pot > goal)
        if hot.size == 0:
            break
        hot = hot[np.argsort(pot[hot])][::-1][:cfg.refine_max_gaps]
        for i in sorted(hot.tolist(), reverse=True):
            sub = np.linspace(r[i], r[i + 1], cfg.refine_factor + 1)[1:-1]
            bl = np.concatenate([x - sub[::-1], [x - r[i]]])
            br = np.concatenate([[x + r[i]], x + sub])
            vl, el = integral_increments(f, phase, x, bl)
            vr, er = integral_increments(f, phase, x, br)
            I_sub = I[i] + np.cumsum(vl[::-1] + vr)
            q_sub = qe[i] + np.cumsum(el[::-1] + er)
            r = np.insert(r, i + 1, sub)
            I = np.insert(I, i + 1, I_sub)
            qe = np.insert(qe, i + 1, q_sub)
    return r, I, qe


def _avg_eval(f, phase, x: float, rr: float, cfg: SearchConfig):
    res = average(f, phase, x, rr, tol=cfg.quad_tol)
    return abs(res.value), res.abs_error_estimate


def _golden_polish(f, phase, x: float, r, avg, cfg: SearchConfig):
    """Golden-section around the top local maxima; every eval is a candidate."""
    n = r.size
    if n < 3 or cfg.golden_iters <= 0 or cfg.refine_top_k <= 0:
        return []
    interior = np.arange(1, n - 1)
    is_max = (avg[interior] >= avg[interior - 1]) & (avg[interior] >= avg[interior + 1])
    locs = interior[is_max]
    if locs.size == 0:
        locs = np.array([int(np.argmax(avg))])
    locs = locs[np.argsort(avg[locs])][::-1][:cfg.refine_top_k]
    gr = 0.5 * (math.sqrt(5.0) - 1.0)
    out = []
    for i in locs.tolist():
        lo = float(r[i - 1]) if i > 0 else 0.5 * float(r[0])
        hi = float(r[i + 1]) if i + 1 < n else float(r[-1])
        if not hi > lo:
            continue
        c1, c2 = hi - gr * (hi - lo), lo + gr * (hi - lo)
        v1, e1 = _avg_eval(f, phase, x, c1, cfg)
        v2, e2 = _avg_eval(f, phase, x, c2, cfg)
        out += [(c1, v1, e1), (c2, v2, e2)]
        for _ in range(cfg.golden_iters):
            if v1 < v2:
                lo, c1, v1 = c1, c2, v2
                c2 = lo + gr * (hi - lo)
                v2, e2 = _avg_eval(f, phase, x, c2, cfg)
                out.append((c2, v2, e2))
            else:
                hi, c2, v2 = c2, c1, v1
                c1 = hi - gr * (hi - lo)
                v1, e1 = _avg_eval(f, phase, x, c1, cfg)
                out.append((c1, v1, e1))
    return out


def _bisect_half(f, phase, x: float, lo: float, hi: float, T: float, cfg: SearchConfig,
                 exact_zero_step: bool) -> float:
    for _ in range(cfg.half_bisect_iters):
        mid = 0.5 * (lo + hi)
        if exact_zero_step:
            v = abs(float(f.integral_signed(x - mid, x + mid))) / (2.0 * mid)
        else:
            v, _ = _avg_eval(f, phase, x, mid, cfg)
        if v >= T:
            hi = mid
        else:
            lo = mid
    return hi


def _half_radius(f, phase, x, r, avg, value, r_star, r_min, cfg,
                 exact_zero_step=False) -> float:
    T = cfg.half_level * value
    idx = np.flatnonzero(avg >= T)
    if idx.size:
        k = int(idx[0])
        if k == 0:
            return min(float(r[0]), r_min)
        return _bisect_half(f, phase, x, float(r[k - 1]), float(r[k]), T, cfg,
                            exact_zero_step)
    # no node reaches the level: bracket against r_star itself
    below = r[r < r_star]
    lo = float(below[-1]) if below.size else 0.5 * r_star
    return _bisect_half(f, phase, x, lo, r_star, T, cfg, exact_zero_step)


# ---------------------------------------------------------------------------
# public entry points

def maximal_value(f, phase, x: float, search: SearchConfig = None) -> MaximalSample:
    """Best found |windowed average| at x with radius, half-level radius and err.

    err bounds the distance to the true sup: quadrature error at the winner
    plus the largest remaining gap potential.  case_label stays
    "unclassified"; see classify_case.
    """
    cfg = search if search is not None else SearchConfig()
    x = float(x)
    _support_bounds(f)  # rejects functions without declared compact support

    if (isinstance(phase, ZeroPhase) and isinstance(f, PiecewiseConstantFn)
            and not cfg.force_general):
        return _zero_phase_exact(f, x, cfg)

    radii, r_min, _ = _build_radii(f, phase, x, cfg)
    limit_val = _limit_value(f, x)
    r, I, qe, pruned_next, m_total = _sweep(f, phase, x, radii, limit_val, cfg)
    r, I, qe = _refine(f, phase, x, r, I, qe, cfg)

    avg = np.abs(I) / (2.0 * r)
    aerr = qe / (2.0 * r)
    cands = [(float(r[i]), float(avg[i]), float(aerr[i]))
             for i in np.argsort(avg)[::-1][:3]]
    cands += _golden_polish(f, phase, x, r, avg, cfg)

    # re-evaluate the few best candidates with the adaptive integrator
    cands.sort(key=lambda c: c[1] - c[2], reverse=True)
    value, r_star, aerr_star = -1.0, float(r[int(np.argmax(avg))]), 0.0
    for rr, _, _ in cands[:4]:
        v, e = _avg_eval(f, phase, x, rr, cfg)
        if v > value:
            value, r_star, aerr_star = v, rr, e

    pot = _gap_potentials(f, x, r, I, qe)
    err_gap = max(0.0, float(np.max(pot)) - value) if pot.size else 0.0
    err_small = max(0.0, _interval_abs_max(f, x - r[0], x + r[0]) - value)
    if pruned_next is not None:
        err_tail = max(0.0, m_total / (2.0 * pruned_next) - value)
    else:
        err_tail = max(0.0, float(np.abs(I[-1]) + qe[-1]) / (2.0 * r[-1]) - value)
    err = aerr_star + max(err_gap, err_small, err_tail)

    r_half = _half_radius(f, phase, x, r, avg, value, r_star, r_min, cfg)
    return MaximalSample(x, value, r_star, min(r_half, r_star), err)


def _zero_phase_exact(f: PiecewiseConstantFn, x: float, cfg: SearchConfig) -> MaximalSample:
    """No phase: the signed window mass is piecewise linear in r, so the sup
    sits at an edge radius or in the r -> 0 limit.  err is exactly 0."""
    bp = f.breakpoints
    dist = max(bp[0] - x, x - bp[-1], 0.0)
    r_min = cfg.r_min_scale * (1.0 + dist)
    cands = np.unique(np.abs(x - bp))
    cands = cands[cands > 0.0]
    limit = _limit_value(f, x)
    if cands.size:
        vals = np.abs(f.integral_signed(x - cands, x + cands)) / (2.0 * cands)
        k = int(np.argmax(vals))
        value, r_star = float(vals[k]), float(cands[k])
    else:
        vals = np.zeros(0)
        value, r_star = 0.0, r_min
    if limit >= value:
        value = limit
        r_star = min(0.5 * float(cands[0]), r_min) if cands.size else r_min
    # half-level radius over the same exact candidate grid
    T = cfg.half_level * value
    if value == 0.0:
        r_half = min(float(cands[0]), r_min) if cands.size else r_min
    elif limit >= T:
        r_half = min(0.5 * float(cands[0]), r_min) if cands.size else r_min
    else:
        idx = np.flatnonzero(vals >= T)
        k = int(idx[0])
        lo = float(cands[k - 1]) if k > 0 else 0.5 * float(cands[0])
        r_half = _bisect_half(f, None, x, lo, float(cands[k]), T, cfg, True)
    return MaximalSample(x, value, r_star, min(r_half, r_star), 0.0)


def radius_function(f, phase, x: float, sample: MaximalSample) -> float:
    """Smallest radius (grid scan plus bisection) with |average| >= value/2.

    Always <= sample.r_star; recomputed from scratch against sample.value.
    """
    cfg = SearchConfig()
    T = 0.5 * sample.value
    if sample.value == 0.0:
        return sample.r_star
    s_lo, s_hi = _support_bounds(f)
    dist = max(s_lo - x, x - s_hi, 0.0)
    r_min = min(cfg.r_min_scale * (1.0 + dist), sample.r_star)
    exact = isinstance(phase, ZeroPhase) and isinstance(f, PiecewiseConstantFn)
    grid = np.unique(np.concatenate([
        np.geomspace(r_min, sample.r_star, 97),
        _edge_radii(f, x),
        [sample.r_star],
    ]))
    grid = grid[(grid > 0.0) & (grid <= sample.r_star)]
    prev = None
    for rr in grid:
        if exact:
            v = abs(float(f.integral_signed(x - rr, x + rr))) / (2.0 * rr)
        else:
            v, _ = _avg_eval(f, phase, x, float(rr), cfg)
        if v >= T:
            if prev is None:
                return float(rr)
            return _bisect_half(f, phase, x, prev, float(rr), T, cfg, exact)
        prev = float(rr)
    return sample.r_star


def classify_case_detail(sample: MaximalSample, M_cut: float, epsilon: float):
    """Case label plus a flag for boundary ties (resolved to the smaller index)."""
    if not (0.0 < epsilon < 1.0):
        raise PreconditionError("epsilon must lie in (0, 1)")
    if not M_cut >= 1.0:
        raise PreconditionError("M_cut must be >= 1")
    ax = abs(sample.x)
    rtol = 1e-9 * max(1.0, ax)
    if ax <= M_cut:
        return "A1", bool(abs(ax - M_cut) <= rtol)
    thr = ax ** (-(1.0 + epsilon))
    if sample.r_half <= ax / 2.0 + rtol:
        tie_r = abs(sample.r_half - ax / 2.0) <= rtol
        tie_v = abs(sample.value - thr) <= sample.err
        if sample.value <= thr + sample.err:
            return "A2", bool(tie_r or tie_v)
        return "A3", bool(tie_r)
    if sample.r_half >= 2.0 * ax - rtol:
        return "A4_1", bool(abs(sample.r_half - 2.0 * ax) <= rtol)
    return "A4_2", False


def classify_case(sample: MaximalSample, M_cut: float, epsilon: float) -> str:
    return classify_case_detail(sample, M_cut, epsilon)[0]


def m_cut_auto(phase) -> float:
    """Smallest cutoff M >= 1 past which the top phase term out-muscles the rest.

    Criterion: d_m (lower bound of |c_m|) M^{d_m - 1} >= 2 sum over lower
    terms of d_j sup|c_j| M^{d_j - 1}.  Single-term phases (and any family
    without a declared lower bound on the top coefficient) get 1.0.
    """
    if isinstance(phase, CurvedPowerSum):
        exps = list(phase.exponents)
        sups = [c.sup for c in phase.coeffs]
        lead_low = 1.0 / phase.top_inv_sup
    elif isinstance(phase, LaurentPoly):
        coeffs = phase.coeffs
        if phase.degree < 2 or not all(c.is_const for c in coeffs.values()):
            return 1.0
        exps = sorted(p for p in coeffs if p != 0)
        if not exps or exps[-1] != phase.degree:
            return 1.0
        sups = [abs(coeffs[p].const_value) for p in exps]
        lead_low = abs(coeffs[phase.degree].const_value)
        if lead_low == 0.0:
            return 1.0
    else:
        return 1.0

    if len(exps) <= 1:
        return 1.0
    dm = exps[-1]
    rest = [(d, s) for d, s in zip(exps[:-1], sups[:-1]) if d != 0 and s > 0]
    if not rest:
        return 1.0

    def dominates(M: float) -> bool:
        lhs = dm * lead_low * M ** (dm - 1.0)
        rhs = 2.0 * sum(abs(d) * s * M ** (d - 1.0) for d, s in rest)
        return lhs >= rhs

    if dominates(1.0):
        return 1.0
    hi = 2.0
    while not dominates(hi):
        hi *= 2.0
        if hi > 2.0 ** 200:
            raise PreconditionError("no finite dominance cutoff found")
    lo = hi / 2.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if dominates(mid):
            hi = mid
        else:
            lo = mid
    return hi
