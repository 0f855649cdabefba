"""Test functions: step atoms, indicator functions, polynomial bumps, and
the two divergence-driving series (truncated to desk scale).

Step functions are kept as sorted breakpoints plus per-cell values, so every
norm, overlap, and sliding-window mass is computed exactly from breakpoint
arithmetic.  The smooth family is the C^1 spline h*(1 - u^2)^2, chosen over
Gaussians because all its L^p and derivative norms are closed-form (beta
function identities), which keeps acceptance values exact.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import beta as _beta_fn

from .errors import PreconditionError

__all__ = [
    "PiecewiseConstantFn",
    "SmoothTestFn",
    "CounterexampleSpec",
    "atom_fbeta",
    "char_fn",
    "smooth_bump",
    "counterexample_part1",
    "counterexample_part2",
    "random_step_corpus",
    "fn_from_json",
]


class PiecewiseConstantFn:
    """Step function: value ``values[i]`` on ``[breakpoints[i], breakpoints[i+1])``,
    zero outside.  Immutable; all mass queries are exact breakpoint sums.
    """

    __slots__ = ("breakpoints", "values", "_cum_signed", "_cum_abs")

    def __init__(self, breakpoints, values):
        bp = np.asarray(breakpoints, dtype=float)
        v = np.asarray(values, dtype=float)
        if bp.ndim != 1 or v.ndim != 1 or bp.size != v.size + 1 or v.size < 1:
            raise ValueError("need n+1 breakpoints for n cell values")
        if not np.all(np.diff(bp) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        if not (np.all(np.isfinite(bp)) and np.all(np.isfinite(v))):
            raise ValueError("breakpoints and values must be finite")
        self.breakpoints = bp
        self.values = v
        widths = np.diff(bp)
        self._cum_signed = np.concatenate([[0.0], np.cumsum(v * widths)])
        self._cum_abs = np.concatenate([[0.0], np.cumsum(np.abs(v) * widths)])

    # -- basic queries ------------------------------------------------

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        inside = (idx >= 0) & (idx < self.values.size)
        out = np.where(inside, self.values[np.clip(idx, 0, self.values.size - 1)], 0.0)
        if np.ndim(x) == 0:
            return float(out)
        return out

    @property
    def l1(self) -> float:
        return float(self._cum_abs[-1])

    @property
    def total_integral(self) -> float:
        return float(self._cum_signed[-1])

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    @property
    def support_radius(self) -> float:
        return float(max(abs(self.breakpoints[0]), abs(self.breakpoints[-1])))

    @property
    def support_interval(self):
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    def integral_signed(self, a, b):
        """Exact signed integral of f over [a, b] (a <= b elementwise)."""
        ca = np.interp(a, self.breakpoints, self._cum_signed)
        cb = np.interp(b, self.breakpoints, self._cum_signed)
        return cb - ca

    def integral_abs(self, a, b):
        """Exact integral of |f| over [a, b]."""
        ca = np.interp(a, self.breakpoints, self._cum_abs)
        cb = np.interp(b, self.breakpoints, self._cum_abs)
        return cb - ca

    # -- construction -------------------------------------------------

    def translate(self, shift: float) -> "PiecewiseConstantFn":
        return PiecewiseConstantFn(self.breakpoints + shift, self.values)

    def scale_values(self, factor: float) -> "PiecewiseConstantFn":
        return PiecewiseConstantFn(self.breakpoints, self.values * factor)

    def __add__(self, other: "PiecewiseConstantFn") -> "PiecewiseConstantFn":
        bp = np.union1d(self.breakpoints, other.breakpoints)
        mids = 0.5 * (bp[:-1] + bp[1:])
        return PiecewiseConstantFn(bp, self(mids) + other(mids))

    def __repr__(self):
        return f"PiecewiseConstantFn({self.values.size} cells on {self.support_interval})"

    def to_json(self) -> dict:
        return {
            "type": "step",
            "breakpoints": self.breakpoints.tolist(),
            "values": self.values.tolist(),
        }


@dataclass(frozen=True)
class SmoothTestFn:
    """Polynomial bump height*(1 - u^2)^2, u = (x - center)/scale, support |u| <= 1.

    ``value``/``derivative`` are evaluable (vectorized); the norm methods
    are closed forms.  This is the whole smooth corpus: translates and
    dilations of one C^1 spline.
    """

    center: float
    scale: float
    height: float

    def __post_init__(self):
        if not self.scale > 0:
            raise PreconditionError("scale must be positive")

    def value(self, x):
        u = (np.asarray(x, dtype=float) - self.center) / self.scale
        inside = np.abs(u) <= 1.0
        out = np.where(inside, self.height * (1.0 - u * u) ** 2, 0.0)
        return float(out) if np.ndim(x) == 0 else out

    __call__ = value

    def derivative(self, x):
        u = (np.asarray(x, dtype=float) - self.center) / self.scale
        inside = np.abs(u) <= 1.0
        out = np.where(inside, -4.0 * self.height * u * (1.0 - u * u) / self.scale, 0.0)
        return float(out) if np.ndim(x) == 0 else out

    @property
    def support_interval(self):
        return self.center - self.scale, self.center + self.scale

    @property
    def support_radius(self) -> float:
        a, b = self.support_interval
        return max(abs(a), abs(b))

    @property
    def sup_norm(self) -> float:
        return abs(self.height)

    def lp_norm(self, p) -> float:
        """||f||_p, exact: int (1-u^2)^{2p} = B(1/2, 2p+1)."""
        h, s = abs(self.height), self.scale
        if p == math.inf:
            return h
        return (h ** p * s * float(_beta_fn(0.5, 2.0 * p + 1.0))) ** (1.0 / p)

    @property
    def l1(self) -> float:
        return abs(self.height) * self.scale * 16.0 / 15.0

    def deriv_lp_norm(self, p) -> float:
        """||f'||_p, exact: int_{-1}^{1} |u|^p (1-u^2)^p du = B((p+1)/2, p+1)."""
        h, s = abs(self.height), self.scale
        if p == math.inf:
            return 8.0 * h / (3.0 * math.sqrt(3.0) * s)
        return ((4.0 * h / s) ** p * s * float(_beta_fn(0.5 * (p + 1.0), p + 1.0))) ** (1.0 / p)

    def mass_cdf(self, x):
        """int_{-inf}^{x} |f|, closed form (|f| = f up to the sign of height)."""
        u = np.clip((np.asarray(x, dtype=float) - self.center) / self.scale, -1.0, 1.0)
        prim = u - 2.0 * u ** 3 / 3.0 + u ** 5 / 5.0 + 8.0 / 15.0
        out = abs(self.height) * self.scale * prim
        return float(out) if np.ndim(x) == 0 else out

    def integral_abs(self, a, b):
        return self.mass_cdf(b) - self.mass_cdf(a)

    def translate(self, shift: float) -> "SmoothTestFn":
        return SmoothTestFn(self.center + shift, self.scale, self.height)

    def dilate(self, factor: float) -> "SmoothTestFn":
        return SmoothTestFn(self.center, self.scale * factor, self.height)

    def kernel_params(self):
        return np.array([self.center, self.scale, self.height], dtype=float)

    def to_json(self) -> dict:
        return {"type": "bump", "center": self.center, "scale": self.scale, "height": self.height}


def smooth_bump(center: float, scale: float, height: float) -> SmoothTestFn:
    """C^1 polynomial bump with closed-form norms (see SmoothTestFn)."""
    return SmoothTestFn(float(center), float(scale), float(height))


# ---------------------------------------------------------------------------
# the paper-scale building blocks

def atom_fbeta(beta: float) -> PiecewiseConstantFn:
    """Odd mean-zero atom: -1/(2 beta) on [-beta, 0), +1/(2 beta) on [0, beta).

    Unit L^1 mass for every beta.
    """
    if not beta > 0:
        raise PreconditionError("beta must be positive")
    h = 0.5 / beta
    return PiecewiseConstantFn([-beta, 0.0, beta], [-h, h])


def char_fn(beta: float) -> PiecewiseConstantFn:
    """Indicator of [-beta, beta]."""
    if not beta > 0:
        raise PreconditionError("beta must be positive")
    return PiecewiseConstantFn([-beta, beta], [1.0])


@dataclass(frozen=True)
class CounterexampleSpec:
    """Per-term metadata for a truncated divergence series."""

    variant: str                 # "part1" | "part2"
    count: int
    centers: np.ndarray          # strictly increasing
    scales: np.ndarray           # atom half-widths (= per-term L^1 coefficient)
    term_l1: np.ndarray          # L^1 mass of each translated term
    h1_bound: float              # sum of atomic coefficients (convergent comparator)
    overlaps: tuple = ()         # (i, j, overlap_length) for any support overlaps

    def __post_init__(self):
        if not np.all(np.diff(self.centers) > 0):
            raise ValueError("centers must be strictly increasing")


def _assemble_terms(terms, variant, centers, scales, term_l1, h1_bound):
    supports = [t.support_interval for t in terms]
    overlaps = []
    for i in range(len(supports) - 1):
        lo = max(supports[i][0], supports[i + 1][0])
        hi = min(supports[i][1], supports[i + 1][1])
        if hi > lo:
            overlaps.append((i + 1, i + 2, hi - lo))
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    spec = CounterexampleSpec(
        variant=variant,
        count=len(terms),
        centers=np.asarray(centers, dtype=float),
        scales=np.asarray(scales, dtype=float),
        term_l1=np.asarray(term_l1, dtype=float),
        h1_bound=float(h1_bound),
        overlaps=tuple(overlaps),
    )
    return total, spec


def counterexample_part1(K: int):
    """Sum of rescaled atoms at centers k^2, k = 1..K.

    Term k is 2*w_k * (unit atom of half-width w_k), w_k = 1/(k log^2(k+1)):
    sup height exactly 1, L^1 mass 2*w_k.  Adjacent supports are checked for
    overlap rather than assumed disjoint (the widths of the first couple of
    terms are not small), and any overlap is reported in the spec.
    """
    if K < 1:
        raise PreconditionError("K must be >= 1")
    ks = np.arange(1, K + 1, dtype=float)
    w = 1.0 / (ks * np.log(ks + 1.0) ** 2)
    centers = ks ** 2
    terms = [
        atom_fbeta(w[i]).scale_values(2.0 * w[i]).translate(centers[i])
        for i in range(K)
    ]
    return _assemble_terms(
        terms, "part1", centers, w, term_l1=2.0 * w, h1_bound=float(np.sum(w))
    )


def counterexample_part2(N: int):
    """Sum of scaled atoms at doubly exponential centers 2^(2^n), n = 1..N.

    Term n is beta_n * (unit atom of half-width beta_n), beta_n =
    1/(n log^2(n+1)).  Capped at N = 4 (center 65536) to stay at desk scale.
    """
    if not 1 <= N <= 4:
        raise PreconditionError("N must be in 1..4")
    ns = np.arange(1, N + 1, dtype=float)
    betas = 1.0 / (ns * np.log(ns + 1.0) ** 2)
    centers = np.array([2.0 ** (2.0 ** n) for n in range(1, N + 1)])
    terms = [
        atom_fbeta(betas[i]).scale_values(betas[i]).translate(centers[i])
        for i in range(N)
    ]
    return _assemble_terms(
        terms, "part2", centers, betas, term_l1=betas, h1_bound=float(np.sum(betas))
    )


# ---------------------------------------------------------------------------
# corpora

def random_step_corpus(count: int, seed: int, nonnegative: bool = True,
                       max_cells: int = 8, span: float = 10.0, vmax: float = 3.0):
    """Seeded corpus of random step functions for property suites.

    Nonnegative by default: plain averaging of a signed f sees cancellation
    that the absolute-value maximal average does not, so oracle-equality
    corpora must be nonnegative.  Signed corpora (nonnegative=False) are for
    domination-only checks.
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(1, max_cells + 1))
        bp = np.sort(rng.uniform(-span, span, size=n + 1))
        while np.min(np.diff(bp)) <= 1e-9:
            bp = np.sort(rng.uniform(-span, span, size=n + 1))
        v = rng.uniform(0.0 if nonnegative else -vmax, vmax, size=n)
        if nonnegative:
            v[rng.integers(0, n)] += 0.1  # keep at least one clearly positive cell
        out.append(PiecewiseConstantFn(bp, v))
    return out


def fn_from_json(obj) -> object:
    """Rebuild a test function from its JSON form (see to_json methods)."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    kind = obj.get("type")
    if kind == "step":
        return PiecewiseConstantFn(obj["breakpoints"], obj["values"])
    if kind == "bump":
        return smooth_bump(obj["center"], obj["scale"], obj["height"])
    raise ValueError(f"unknown function type: {kind!r}")
