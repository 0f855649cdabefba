"""Phase families for oscillatory averages, with exact t-derivatives.

Four working families plus a zero phase:

* ``Separable``       g(x, t) = A(x) * B(t)
* ``LaurentPoly``     g(x, t) = sum_{j=-d}^{d} c_j(x) * t^j   (integer powers)
* ``CurvedPowerSum``  g(x, t) = sum_j c_j(x) * |t|^{d_j},  2 <= d_1 < ... < d_m
* ``Quadratic``       g(x, t) = a(x) * t^2

Coefficients are evaluable closures paired with *declared* sup bounds
(:class:`Coeff`).  Sampling can never certify a sup, so bounds are stored,
not inferred; every constant that feeds a rigorous estimate downstream
(derivative envelopes, truncation radii) reads the stored bound.

The binomial-series helpers at the bottom serve the Taylor expansion of
c(x)|x - t|^{d} around t = 0 used by the far-field analysis: a truncated
expansion plus a certified tail bound with geometric decay in the
truncation level.
"""

import ast
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import binom as _binom

from .errors import PhaseDomainError, PreconditionError

__all__ = [
    "Coeff",
    "ZeroPhase",
    "Separable",
    "LaurentPoly",
    "CurvedPowerSum",
    "Quadratic",
    "eval_phase",
    "phase_dt",
    "dt_abs_sup",
    "derivative_sup_bound",
    "binom_series_tail",
    "binom_coeff",
    "modified_amplitude_phase",
    "phase_from_json",
    "phase_to_json",
    "compile_expr",
    "differentiate_expr",
]


# ---------------------------------------------------------------------------
# expression mini-grammar
#
# Coefficient functions of x are restricted to a whitelisted arithmetic
# grammar: numbers, the variable x, + - * /, ** with a constant exponent,
# sin, cos, and clamp(expr, lo, hi) with constant lo/hi.  Expressions are
# compiled once and evaluated with numpy, so they vectorize.  A mechanical
# AST differentiator provides derivatives (used for the t-factor of
# separable phases).

def _clamp(u, lo, hi):
    return np.minimum(hi, np.maximum(lo, u))


def _clamp_gate(u, lo, hi):
    # 1 where clamp is the identity, 0 where it is flat
    return np.where((u > lo) & (u < hi), 1.0, 0.0)


_EVAL_NS = {
    "sin": np.sin,
    "cos": np.cos,
    "clamp": _clamp,
    "_clamp_gate": _clamp_gate,
}

_ALLOWED_CALLS = ("sin", "cos", "clamp")


def _validate_expr(node, src):
    if isinstance(node, ast.Expression):
        _validate_expr(node.body, src)
    elif isinstance(node, ast.BinOp):
        if not isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)):
            raise ValueError(f"operator not allowed in coefficient expression: {src!r}")
        if isinstance(node.op, ast.Pow) and not _is_const(node.right):
            raise ValueError(f"** requires a constant exponent: {src!r}")
        _validate_expr(node.left, src)
        _validate_expr(node.right, src)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.USub, ast.UAdd)):
            raise ValueError(f"unary operator not allowed: {src!r}")
        _validate_expr(node.operand, src)
    elif isinstance(node, ast.Call):
        if not (isinstance(node.func, ast.Name) and node.func.id in _ALLOWED_CALLS):
            raise ValueError(f"call not allowed in coefficient expression: {src!r}")
        if node.keywords:
            raise ValueError(f"keyword arguments not allowed: {src!r}")
        if node.func.id == "clamp":
            if len(node.args) != 3 or not all(_is_const(a) for a in node.args[1:]):
                raise ValueError(f"clamp needs (expr, const, const): {src!r}")
        elif len(node.args) != 1:
            raise ValueError(f"{node.func.id} takes one argument: {src!r}")
        for a in node.args:
            _validate_expr(a, src)
    elif isinstance(node, ast.Name):
        if node.id != "x":
            raise ValueError(f"unknown name {node.id!r} in expression {src!r}")
    elif isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)):
            raise ValueError(f"non-numeric constant in expression {src!r}")
    else:
        raise ValueError(f"syntax not allowed in coefficient expression: {src!r}")


def _is_const(node):
    if isinstance(node, ast.Constant):
        return isinstance(node.value, (int, float))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        return _is_const(node.operand)
    return False


def _const_value(node):
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node.op, ast.USub):
        return -_const_value(node.operand)
    return _const_value(node.operand)


def compile_expr(src: str):
    """Compile a whitelisted expression of x into a vectorized callable."""
    tree = ast.parse(src, mode="eval")
    _validate_expr(tree, src)
    code = compile(tree, f"<coeff {src!r}>", "eval")

    def fn(x):
        return eval(code, {"__builtins__": {}}, {**_EVAL_NS, "x": x})

    fn.__name__ = f"expr({src})"
    return fn


def _num(v) -> ast.expr:
    if v < 0:
        return ast.UnaryOp(op=ast.USub(), operand=ast.Constant(value=-v))
    return ast.Constant(value=v)


def _diff(node) -> ast.expr:
    """Derivative of a validated expression node, as a new AST."""
    if isinstance(node, ast.Constant):
        return _num(0.0)
    if isinstance(node, ast.Name):
        return _num(1.0)
    if isinstance(node, ast.UnaryOp):
        return ast.UnaryOp(op=node.op, operand=_diff(node.operand))
    if isinstance(node, ast.BinOp):
        u, v = node.left, node.right
        du = _diff(u)
        if isinstance(node.op, (ast.Add, ast.Sub)):
            return ast.BinOp(left=du, op=node.op, right=_diff(v))
        if isinstance(node.op, ast.Mult):
            return ast.BinOp(
                left=ast.BinOp(left=du, op=ast.Mult(), right=v),
                op=ast.Add(),
                right=ast.BinOp(left=u, op=ast.Mult(), right=_diff(v)),
            )
        if isinstance(node.op, ast.Div):
            num = ast.BinOp(
                left=ast.BinOp(left=du, op=ast.Mult(), right=v),
                op=ast.Sub(),
                right=ast.BinOp(left=u, op=ast.Mult(), right=_diff(v)),
            )
            return ast.BinOp(
                left=num,
                op=ast.Div(),
                right=ast.BinOp(left=v, op=ast.Pow(), right=_num(2.0)),
            )
        # Pow with constant exponent e: e * u**(e-1) * u'
        e = _const_value(v)
        if e == 0.0:
            return _num(0.0)
        return ast.BinOp(
            left=ast.BinOp(
                left=_num(e),
                op=ast.Mult(),
                right=ast.BinOp(left=u, op=ast.Pow(), right=_num(e - 1.0)),
            ),
            op=ast.Mult(),
            right=du,
        )
    if isinstance(node, ast.Call):
        arg = node.args[0]
        darg = _diff(arg)
        if node.func.id == "sin":
            outer = ast.Call(func=ast.Name(id="cos", ctx=ast.Load()), args=[arg], keywords=[])
        elif node.func.id == "cos":
            outer = ast.UnaryOp(
                op=ast.USub(),
                operand=ast.Call(func=ast.Name(id="sin", ctx=ast.Load()), args=[arg], keywords=[]),
            )
        else:  # clamp: slope 1 strictly inside [lo, hi], 0 outside
            outer = ast.Call(
                func=ast.Name(id="_clamp_gate", ctx=ast.Load()),
                args=[arg, node.args[1], node.args[2]],
                keywords=[],
            )
        return ast.BinOp(left=outer, op=ast.Mult(), right=darg)
    raise ValueError("unreachable node in differentiation")


def differentiate_expr(src: str):
    """Mechanical derivative of a whitelisted expression, as a callable of x."""
    tree = ast.parse(src, mode="eval")
    _validate_expr(tree, src)
    dtree = ast.Expression(body=_diff(tree.body))
    code = compile(ast.fix_missing_locations(dtree), f"<d/dx {src!r}>", "eval")

    def fn(x):
        return eval(code, {"__builtins__": {}}, {**_EVAL_NS, "x": x})

    fn.__name__ = f"d/dx({src})"
    return fn


# ---------------------------------------------------------------------------
# coefficients

class Coeff:
    """An evaluable coefficient of x with a declared sup bound.

    Sup bounds are part of the data, never estimated: downstream constants
    (derivative envelopes, cutoffs) must dominate the true sup, which point
    samples cannot certify.  For a constant the bound is its absolute value.
    """

    __slots__ = ("fn", "sup", "src", "const_value")

    def __init__(self, fn, sup: float, src: str = "", const_value=None):
        if not (sup >= 0) or not math.isfinite(sup):
            raise ValueError("coefficient sup bound must be finite and >= 0")
        self.fn = fn
        self.sup = float(sup)
        self.src = src
        self.const_value = const_value

    @classmethod
    def constant(cls, v) -> "Coeff":
        v = float(v)

        def fn(x):
            if np.ndim(x) == 0:
                return v
            return np.full(np.shape(x), v)

        return cls(fn, abs(v), src=repr(v), const_value=v)

    @classmethod
    def from_expr(cls, src: str, sup: float) -> "Coeff":
        return cls(compile_expr(src), sup, src=src)

    @property
    def is_const(self) -> bool:
        return self.const_value is not None

    def __call__(self, x):
        return self.fn(x)

    def __repr__(self):
        return f"Coeff({self.src or self.fn.__name__}, sup={self.sup})"


def _as_coeff(c, sup=None) -> Coeff:
    if isinstance(c, Coeff):
        return c
    if isinstance(c, (int, float)):
        return Coeff.constant(c)
    if isinstance(c, str):
        if sup is None:
            raise ValueError(f"expression coefficient {c!r} needs a declared sup bound")
        return Coeff.from_expr(c, sup)
    raise TypeError(f"cannot interpret {c!r} as a coefficient")


# ---------------------------------------------------------------------------
# phase variants

@dataclass(frozen=True)
class ZeroPhase:
    """g == 0: the operator degenerates to plain averaging."""

    family = "zero"


@dataclass(frozen=True)
class Separable:
    """g(x, t) = x_factor(x) * t_factor(t).

    ``t_factor_deriv`` must be the derivative of ``t_factor``; when the
    factors come from the expression grammar it is derived mechanically.
    """

    x_factor: Coeff
    t_factor: object
    t_factor_deriv: object
    x_src: str = ""
    t_src: str = ""

    family = "separable"

    @classmethod
    def from_exprs(cls, x_src: str, x_sup: float, t_src: str) -> "Separable":
        return cls(
            x_factor=Coeff.from_expr(x_src, x_sup),
            t_factor=compile_expr(t_src),
            t_factor_deriv=differentiate_expr(t_src),
            x_src=x_src,
            t_src=t_src,
        )


@dataclass(frozen=True)
class LaurentPoly:
    """g(x, t) = sum of c_j(x) t^j over integer powers j in [-degree, degree]."""

    degree: int
    coeffs: dict  # power -> Coeff

    family = "laurent"

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        for j in self.coeffs:
            if not isinstance(j, int) or abs(j) > self.degree:
                raise ValueError(f"power {j} outside [-degree, degree]")

    @property
    def has_negative_powers(self) -> bool:
        return any(j < 0 for j in self.coeffs)

    @classmethod
    def monomial(cls, power: int, coeff=1.0) -> "LaurentPoly":
        return cls(degree=abs(power), coeffs={power: _as_coeff(coeff)})

    def max_coeff_sup(self) -> float:
        return max(c.sup for c in self.coeffs.values())


@dataclass(frozen=True)
class CurvedPowerSum:
    """g(x, t) = sum_j c_j(x) |t|^{d_j}, exponents strictly increasing, d_1 >= 2.

    The top coefficient must be bounded away from 0; ``top_inv_sup`` stores
    the declared sup of |1/c_m(x)|.
    """

    coeffs: tuple
    exponents: tuple
    top_inv_sup: float

    family = "curved"

    def __post_init__(self):
        if len(self.coeffs) != len(self.exponents) or not self.coeffs:
            raise ValueError("need matching, nonempty coefficient/exponent lists")
        ex = self.exponents
        if any(ex[i] >= ex[i + 1] for i in range(len(ex) - 1)):
            raise ValueError("exponents must be strictly increasing")
        if ex[0] < 2:
            raise ValueError("smallest exponent must be >= 2")
        if not (self.top_inv_sup > 0) or not math.isfinite(self.top_inv_sup):
            raise ValueError("top_inv_sup must be finite and positive")

    @classmethod
    def single(cls, exponent: float, coeff=1.0) -> "CurvedPowerSum":
        c = _as_coeff(coeff)
        if not c.is_const or c.const_value == 0:
            raise ValueError("single() wants a nonzero constant coefficient")
        return cls(coeffs=(c,), exponents=(float(exponent),), top_inv_sup=1.0 / abs(c.const_value))

    @property
    def top_exponent(self) -> float:
        return self.exponents[-1]


@dataclass(frozen=True)
class Quadratic:
    """g(x, t) = coeff(x) * t^2 with coeff and 1/coeff both bounded."""

    coeff: Coeff
    inv_sup: float

    family = "quadratic"

    def __post_init__(self):
        if not (self.inv_sup > 0) or not math.isfinite(self.inv_sup):
            raise ValueError("inv_sup must be finite and positive")

    @classmethod
    def unit(cls) -> "Quadratic":
        return cls(coeff=Coeff.constant(1.0), inv_sup=1.0)


PHASE_TYPES = (ZeroPhase, Separable, LaurentPoly, CurvedPowerSum, Quadratic)


# ---------------------------------------------------------------------------
# evaluation

def _check_finite(v, what):
    if not np.all(np.isfinite(v)):
        raise OverflowError(f"{what} exceeded representable range")
    return v


def eval_phase(phase, x, t):
    """Evaluate g(x, t).  Accepts scalar or array t."""
    if isinstance(phase, ZeroPhase):
        return 0.0 if np.ndim(t) == 0 else np.zeros(np.shape(t))
    if isinstance(phase, Separable):
        return _check_finite(phase.x_factor(x) * phase.t_factor(t), "phase value")
    if isinstance(phase, Quadratic):
        t = np.asarray(t, dtype=float) if np.ndim(t) else float(t)
        return _check_finite(phase.coeff(x) * t * t, "phase value")
    if isinstance(phase, LaurentPoly):
        if phase.has_negative_powers and np.any(np.asarray(t) == 0.0):
            raise PhaseDomainError("t = 0 with negative powers present")
        acc = 0.0 if np.ndim(t) == 0 else np.zeros(np.shape(t))
        tt = np.asarray(t, dtype=float) if np.ndim(t) else float(t)
        for j, c in phase.coeffs.items():
            acc = acc + c(x) * tt ** j
        return _check_finite(acc, "phase value")
    if isinstance(phase, CurvedPowerSum):
        at = np.abs(t)
        acc = 0.0 if np.ndim(t) == 0 else np.zeros(np.shape(t))
        for c, d in zip(phase.coeffs, phase.exponents):
            # |t|^d via IEEE pow: 0^d = 0 for d > 0, removable at the origin
            acc = acc + c(x) * at ** d
        return _check_finite(acc, "phase value")
    raise TypeError(f"not a phase: {phase!r}")


def phase_dt(phase, x, u):
    """Partial derivative of the phase in its t argument, at t = u."""
    if isinstance(phase, ZeroPhase):
        return 0.0 if np.ndim(u) == 0 else np.zeros(np.shape(u))
    if isinstance(phase, Separable):
        return phase.x_factor(x) * phase.t_factor_deriv(u)
    if isinstance(phase, Quadratic):
        return 2.0 * phase.coeff(x) * u
    if isinstance(phase, LaurentPoly):
        if phase.has_negative_powers and np.any(np.asarray(u) == 0.0):
            raise PhaseDomainError("u = 0 with negative powers present")
        acc = 0.0 if np.ndim(u) == 0 else np.zeros(np.shape(u))
        uu = np.asarray(u, dtype=float) if np.ndim(u) else float(u)
        for j, c in phase.coeffs.items():
            if j == 0:
                continue
            acc = acc + c(x) * j * uu ** (j - 1)
        return acc
    if isinstance(phase, CurvedPowerSum):
        if phase.exponents[0] < 1 and np.any(np.asarray(u) == 0.0):
            raise PhaseDomainError("u = 0 with exponent < 1")
        au = np.abs(u)
        acc = 0.0 if np.ndim(u) == 0 else np.zeros(np.shape(u))
        for c, d in zip(phase.coeffs, phase.exponents):
            acc = acc + c(x) * d * au ** (d - 1.0)
        return np.sign(u) * acc
    raise TypeError(f"not a phase: {phase!r}")


def _interval_abs_pow_max(lo, hi, e):
    """max |u|^e over u in [lo, hi]; e may be negative (then inf if 0 inside)."""
    if e >= 0:
        return max(abs(lo), abs(hi)) ** e
    if lo <= 0.0 <= hi:
        return math.inf
    m = min(abs(lo), abs(hi))
    return m ** e


def dt_abs_sup(phase, x, u_lo: float, u_hi: float) -> float:
    """Upper bound for sup |d/dt g(x, t)| over t in [u_lo, u_hi].

    Rigorous for the structured families given the coefficient values at x
    (triangle inequality term by term).  For Separable it multiplies the
    x-factor by a safety-padded grid max of the t-derivative; callers use
    it only for panel sizing, where an estimate is acceptable because the
    quadrature error is controlled adaptively afterwards.
    """
    if u_lo > u_hi:
        u_lo, u_hi = u_hi, u_lo
    if isinstance(phase, ZeroPhase):
        return 0.0
    if isinstance(phase, Quadratic):
        return 2.0 * abs(phase.coeff(x)) * max(abs(u_lo), abs(u_hi))
    if isinstance(phase, LaurentPoly):
        s = 0.0
        for j, c in phase.coeffs.items():
            if j == 0:
                continue
            s += abs(c(x)) * abs(j) * _interval_abs_pow_max(u_lo, u_hi, j - 1)
        return s
    if isinstance(phase, CurvedPowerSum):
        s = 0.0
        for c, d in zip(phase.coeffs, phase.exponents):
            s += abs(c(x)) * d * max(abs(u_lo), abs(u_hi)) ** (d - 1.0)
        return s
    if isinstance(phase, Separable):
        grid = np.linspace(u_lo, u_hi, 257)
        g = np.max(np.abs(phase.t_factor_deriv(grid)))
        return abs(phase.x_factor(x)) * float(g) * 1.25
    raise TypeError(f"not a phase: {phase!r}")


def derivative_sup_bound(phase: LaurentPoly, x_lo: float, x_hi: float, beta: float) -> float:
    """Envelope c * x_hi^(d-1) for |d/dt g| with c = 2 d max_j sup|c_j|.

    Valid in the regime the lower-bound construction works in: u ranges over
    [x_lo - beta, x_hi] with x_lo - beta >= 1, degree >= 2.  The constant is
    the one the downstream window formulas are built from, so it is returned
    verbatim rather than tightened.
    """
    if not isinstance(phase, LaurentPoly):
        raise PreconditionError("derivative_sup_bound applies to LaurentPoly phases")
    if phase.degree < 2:
        raise PreconditionError("degree must be >= 2")
    if x_lo - beta < 1.0:
        raise PreconditionError("requires x_lo - beta >= 1")
    c = 2.0 * phase.degree * phase.max_coeff_sup()
    return c * x_hi ** (phase.degree - 1)


# ---------------------------------------------------------------------------
# binomial series machinery

def binom_coeff(k: float, l: int) -> float:
    """Generalized binomial coefficient k-choose-l for real k."""
    return float(_binom(k, l))


def _leading_product(k: float) -> float:
    # k(k-1)...(k - ceil(k) + 1); for integer k this is k! (the zero factor
    # that a run down to k - floor(k) would introduce is not included)
    p = 1.0
    for i in range(math.ceil(k)):
        p *= k - i
    return p


def binom_series_tail(k: float, L: int) -> float:
    """Upper bound for sum_{l >= L} l * |binom(k, l)|, k >= 2.

    Telescoping bound: the tail is at most C_k * 1/(L - floor(k)) where
    C_k = k(k-1)...(k - floor(k)) for fractional k and k! for integer k.
    Nonincreasing in L, and vanishing as L grows.  For integer k the true
    tail is 0 once L > k (the series terminates); the bound stays positive,
    which is fine for an upper bound.
    """
    if k < 2:
        raise PreconditionError("k must be >= 2")
    if L < math.floor(k) + 2:
        raise PreconditionError("L must be >= floor(k) + 2")
    return _leading_product(k) / (L - math.floor(k))


def modified_amplitude_phase(phase: CurvedPowerSum, x: float, t: float, L=None, tol: float = 1e-12):
    """Truncated second-order-and-up Taylor phase at scale x, with tail bound.

    Expands each c_j(x)|x - t|^{d_j} around t = 0; the constant and linear
    terms are handled by the caller, and this returns the rest:

        value = sum_j c_j(x) * sum_{l=2}^{L} binom(d_j, l) (s*t)^l |x|^{d_j - l}

    with s = -1 for x > 0 and +1 for x < 0, plus a certified bound on the
    dropped l > L terms.  Requires |t| < |x| (convergence region).  When L
    is omitted it is chosen so the tail bound is at most ``tol``.
    """
    if not isinstance(phase, CurvedPowerSum):
        raise PreconditionError("modified_amplitude_phase applies to CurvedPowerSum phases")
    ax, at = abs(x), abs(t)
    if ax == 0.0 or at >= ax:
        raise PhaseDomainError("requires |t| < |x|")
    if t == 0.0:
        return 0.0, 0.0
    d_top = phase.top_exponent
    if L is None:
        # geometric tail decay ratio |t|/|x| < 1 drives the choice
        L = math.floor(d_top) + 2 + math.ceil(math.log(1.0 / tol) / math.log(ax / at))
    L = int(L)
    if L < math.floor(d_top) + 1:
        raise PreconditionError("L too small for a certified tail")
    sgn = -1.0 if x > 0 else 1.0
    rho = at / ax
    value = 0.0
    tail = 0.0
    for c, d in zip(phase.coeffs, phase.exponents):
        cx = float(c(x))
        s = 0.0
        for l in range(2, L + 1):
            s += binom_coeff(d, l) * (sgn * t) ** l * ax ** (d - l)
        value += cx * s
        if float(d).is_integer() and L >= d:
            continue  # series terminated exactly
        tail += abs(cx) * ax ** d * rho ** (L + 1) * binom_series_tail(d, L + 1)
    return value, tail


# ---------------------------------------------------------------------------
# kernel resolution and JSON round-tripping

def resolve_kernel(phase, x: float):
    """Flatten a structured phase at fixed x to (family code, coeffs, exponents).

    Returns None for Separable (handled on the generic path).  Codes match
    the quadrature kernels: 0 zero, 1 laurent, 2 curved, 3 quadratic.
    """
    if isinstance(phase, ZeroPhase):
        return 0, np.zeros(0), np.zeros(0)
    if isinstance(phase, LaurentPoly):
        items = sorted(phase.coeffs.items())
        coef = np.array([float(c(x)) for _, c in items], dtype=float)
        expo = np.array([float(j) for j, _ in items], dtype=float)
        return 1, coef, expo
    if isinstance(phase, CurvedPowerSum):
        coef = np.array([float(c(x)) for c in phase.coeffs], dtype=float)
        expo = np.array(phase.exponents, dtype=float)
        return 2, coef, expo
    if isinstance(phase, Quadratic):
        return 3, np.array([float(phase.coeff(x))]), np.array([2.0])
    if isinstance(phase, Separable):
        return None
    raise TypeError(f"not a phase: {phase!r}")


def singular_at_zero(phase) -> bool:
    return isinstance(phase, LaurentPoly) and phase.has_negative_powers


def _coeff_to_json(c: Coeff):
    if c.is_const:
        return c.const_value, None
    return c.src, c.sup


def phase_to_json(phase) -> dict:
    if isinstance(phase, ZeroPhase):
        return {"family": "zero"}
    if isinstance(phase, Separable):
        if not phase.t_src:
            raise ValueError("only expression-backed separable phases serialize")
        return {
            "family": "separable",
            "coeffs": [phase.x_src or phase.x_factor.src, phase.t_src],
            "sup_bounds": [phase.x_factor.sup, None],
        }
    if isinstance(phase, LaurentPoly):
        items = sorted(phase.coeffs.items())
        cs, sups = zip(*(_coeff_to_json(c) for _, c in items))
        return {
            "family": "laurent",
            "coeffs": list(cs),
            "exponents": [j for j, _ in items],
            "sup_bounds": list(sups),
        }
    if isinstance(phase, CurvedPowerSum):
        cs, sups = zip(*(_coeff_to_json(c) for c in phase.coeffs))
        return {
            "family": "curved",
            "coeffs": list(cs),
            "exponents": list(phase.exponents),
            "sup_bounds": list(sups),
            "inv_sup_top": phase.top_inv_sup,
        }
    if isinstance(phase, Quadratic):
        c, sup = _coeff_to_json(phase.coeff)
        return {
            "family": "quadratic",
            "coeffs": [c],
            "sup_bounds": [sup],
            "inv_sup_top": phase.inv_sup,
        }
    raise TypeError(f"not a phase: {phase!r}")


def phase_from_json(obj: dict):
    """Build a phase from its JSON description.

    Layout: {"family": ..., "coeffs": [...], "exponents": [...],
    "sup_bounds": [...]}.  Coefficients are numbers or expression strings
    (expressions need a sup bound at the same position).  Extra keys:
    "inv_sup_top" declares sup|1/c| for the top curved term or the quadratic
    coefficient (required when that coefficient is an expression).  For
    "separable", coeffs = [x_expr, t_expr] and sup_bounds[0] bounds the
    x-factor; the t-derivative is derived mechanically.
    """
    fam = obj.get("family")
    if fam == "zero":
        return ZeroPhase()
    coeffs = obj.get("coeffs", [])
    sups = obj.get("sup_bounds") or [None] * len(coeffs)
    if fam == "separable":
        if len(coeffs) != 2:
            raise ValueError("separable wants coeffs = [x_expr, t_expr]")
        x_src = str(coeffs[0]) if not isinstance(coeffs[0], (int, float)) else repr(float(coeffs[0]))
        x_sup = sups[0] if sups[0] is not None else (
            abs(float(coeffs[0])) if isinstance(coeffs[0], (int, float)) else None
        )
        if x_sup is None:
            raise ValueError("separable x-factor needs a sup bound")
        return Separable.from_exprs(x_src, float(x_sup), str(coeffs[1]))
    if fam == "laurent":
        expos = obj["exponents"]
        d = max(1, max(abs(int(j)) for j in expos))
        cd = {int(j): _as_coeff(c, s) for j, c, s in zip(expos, coeffs, sups)}
        return LaurentPoly(degree=d, coeffs=cd)
    if fam == "curved":
        cs = tuple(_as_coeff(c, s) for c, s in zip(coeffs, sups))
        inv = obj.get("inv_sup_top")
        if inv is None:
            top = cs[-1]
            if not top.is_const or top.const_value == 0:
                raise ValueError("non-constant top coefficient needs inv_sup_top")
            inv = 1.0 / abs(top.const_value)
        return CurvedPowerSum(coeffs=cs, exponents=tuple(float(e) for e in obj["exponents"]),
                              top_inv_sup=float(inv))
    if fam == "quadratic":
        c = _as_coeff(coeffs[0], sups[0] if sups else None)
        inv = obj.get("inv_sup_top")
        if inv is None:
            if not c.is_const or c.const_value == 0:
                raise ValueError("non-constant quadratic coefficient needs inv_sup_top")
            inv = 1.0 / abs(c.const_value)
        return Quadratic(coeff=c, inv_sup=float(inv))
    raise ValueError(f"unknown phase family: {fam!r}")
