"""Parameter functions Theta_q(mu) given as polynomial expression strings.

Grammar (``^`` binds tighter than unary minus, exponents are unsigned
integer literals, divisors must be nonzero constants)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom ('^' INT)?
    atom   := NUMBER | 'mu' INT | '(' expr ')'

Every accepted expression is a polynomial in ``mu1..mup``; :meth:`ThetaExpr.polynomial`
returns it with exact rational coefficients, which is what the convexity
classification relies on.
"""
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from .errors import ExpressionSyntaxError, NonFinite, UnknownParameter


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Param:
    index: int  # 1-based


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int


def _eval(node, mu):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Param):
        return float(mu[node.index - 1])
    if isinstance(node, Neg):
        return -_eval(node.arg, mu)
    if isinstance(node, Pow):
        return _eval(node.base, mu) ** node.exponent
    a, b = _eval(node.left, mu), _eval(node.right, mu)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    return a / b


def _unparse(node):
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Param):
        return f"mu{node.index}"
    if isinstance(node, Neg):
        return f"(-{_unparse(node.arg)})"
    if isinstance(node, Pow):
        return f"({_unparse(node.base)}^{node.exponent})"
    return f"({_unparse(node.left)} {node.op} {_unparse(node.right)})"


def _params(node, acc):
    if isinstance(node, Param):
        acc.add(node.index)
    elif isinstance(node, Neg):
        _params(node.arg, acc)
    elif isinstance(node, Pow):
        _params(node.base, acc)
    elif isinstance(node, BinOp):
        _params(node.left, acc)
        _params(node.right, acc)
    return acc


# ---------------------------------------------------------------------------
# exact polynomials: {exponent tuple: Fraction}


def _padd(a, b, sign=1):
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, Fraction(0)) + sign * v
    return {k: v for k, v in out.items() if v != 0}


def _pmul(a, b):
    out = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            k = tuple(x + y for x, y in zip(ka, kb))
            out[k] = out.get(k, Fraction(0)) + va * vb
    return {k: v for k, v in out.items() if v != 0}


def _poly(node, p):
    zero = (0,) * p
    if isinstance(node, Num):
        v = Fraction(node.value)
        return {zero: v} if v != 0 else {}
    if isinstance(node, Param):
        k = [0] * p
        k[node.index - 1] = 1
        return {tuple(k): Fraction(1)}
    if isinstance(node, Neg):
        return {k: -v for k, v in _poly(node.arg, p).items()}
    if isinstance(node, Pow):
        base = _poly(node.base, p)
        out = {zero: Fraction(1)}
        for _ in range(node.exponent):
            out = _pmul(out, base)
        return out
    a, b = _poly(node.left, p), _poly(node.right, p)
    if node.op == "+":
        return _padd(a, b)
    if node.op == "-":
        return _padd(a, b, -1)
    if node.op == "*":
        return _pmul(a, b)
    # divisor verified constant and nonzero at parse time
    d = b.get(zero, Fraction(0))
    return {k: v / d for k, v in a.items()}


# ---------------------------------------------------------------------------
# parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<mu>mu(?P<idx>\d+))|(?P<op>[-+*/^()]))"
)


def _tokenize(s):
    tokens = []
    pos = 0
    s_stripped_end = len(s.rstrip())
    while pos < s_stripped_end:
        m = _TOKEN.match(s, pos)
        if m is None or m.end() == pos:
            raise ExpressionSyntaxError(f"unexpected character {s[pos]!r}", pos)
        start = m.start(m.lastgroup if m.lastgroup != "idx" else "mu")
        if m.group("num") is not None:
            tokens.append(("num", m.group("num"), start))
        elif m.group("mu") is not None:
            tokens.append(("mu", int(m.group("idx")), start))
        else:
            tokens.append(("op", m.group("op"), start))
        pos = m.end()
    tokens.append(("end", None, len(s)))
    return tokens


class _Parser:
    def __init__(self, text, p):
        self.text = text
        self.p = p
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, ch):
        kind, val, pos = self.take()
        if kind != "op" or val != ch:
            raise ExpressionSyntaxError(f"expected {ch!r}", pos)

    def parse(self):
        if self.peek()[0] == "end":
            raise ExpressionSyntaxError("empty expression", 0)
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExpressionSyntaxError(f"unexpected token {val!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            _, op, pos = self.take()
            rhs = self.unary()
            if op == "/":
                if _params(rhs, set()):
                    raise ExpressionSyntaxError("division by a parameter-dependent expression", pos)
                d = _eval(rhs, ())
                if d == 0 or not math.isfinite(d):
                    raise ExpressionSyntaxError("division by zero", pos)
            node = BinOp(op, node, rhs)
        return node

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            arg = self.unary()
            return Neg(arg) if val == "-" else arg
        return self.power()

    def power(self):
        base = self.atom()
        kind, val, pos = self.peek()
        if kind == "op" and val == "^":
            self.take()
            kind, val, pos = self.take()
            if kind != "num" or not val.isdigit():
                raise ExpressionSyntaxError("exponent must be an unsigned integer literal", pos)
            return Pow(base, int(val))
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "mu":
            if val < 1 or val > self.p:
                raise UnknownParameter(f"mu{val} referenced but p={self.p} (position {pos})")
            return Param(val)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        what = "end of input" if kind == "end" else repr(val)
        raise ExpressionSyntaxError(f"unexpected {what}", pos)


@dataclass(frozen=True)
class ThetaExpr:
    root: object
    p: int
    source: str = ""

    def __call__(self, mu):
        return self.evaluate(mu)

    def evaluate(self, mu):
        try:
            v = _eval(self.root, mu)
        except (OverflowError, ZeroDivisionError):
            v = math.nan
        if not math.isfinite(v):
            raise NonFinite(f"{self.source!r} is not finite at mu={list(mu)}")
        return v

    def unparse(self):
        return _unparse(self.root)

    def params(self):
        """Sorted 1-based indices of the parameters referenced."""
        return sorted(_params(self.root, set()))

    def polynomial(self):
        return _poly(self.root, self.p)

    def degree(self):
        poly = self.polynomial()
        return max((sum(k) for k in poly), default=0)

    def is_affine(self):
        return self.degree() <= 1

    def restrict(self, var, fixed):
        """Exact 1D polynomial in parameter ``var`` with the others fixed.

        ``fixed`` maps 1-based indices to values. Returns ascending
        coefficients as Fractions.
        """
        coeffs = {}
        for k, v in self.polynomial().items():
            term = v
            for j, e in enumerate(k, start=1):
                if j == var or e == 0:
                    continue
                if j not in fixed:
                    raise ValueError(f"parameter mu{j} is neither free nor fixed")
                term *= Fraction(float(fixed[j])) ** e
            d = k[var - 1]
            coeffs[d] = coeffs.get(d, Fraction(0)) + term
        deg = max((d for d, v in coeffs.items() if v != 0), default=0)
        return [coeffs.get(d, Fraction(0)) for d in range(deg + 1)]

    def interval(self, lower, upper):
        """Outer bound of the range over the box ``[lower, upper]``."""
        lo_tot, hi_tot = 0.0, 0.0
        for k, v in self.polynomial().items():
            lo, hi = 1.0, 1.0
            for j, e in enumerate(k):
                if e:
                    a, b = _ipow(lower[j], upper[j], e)
                    lo, hi = _imul(lo, hi, a, b)
            c = float(v)
            lo, hi = (c * lo, c * hi) if c >= 0 else (c * hi, c * lo)
            lo_tot += lo
            hi_tot += hi
        pad = 1e-12 * max(1.0, abs(lo_tot), abs(hi_tot))
        return lo_tot - pad, hi_tot + pad


def _imul(a, b, c, d):
    prods = (a * c, a * d, b * c, b * d)
    return min(prods), max(prods)


def _ipow(a, b, e):
    if e % 2 == 1 or a >= 0:
        return a ** e, b ** e
    if b <= 0:
        return b ** e, a ** e
    return 0.0, max(a ** e, b ** e)


def parse(expr, p):
    """Parse an expression string over parameters ``mu1..mup``.

    Raises
    ------
    ExpressionSyntaxError
        Malformed input; carries the offending position.
    UnknownParameter
        Reference to ``muK`` with ``K > p`` (or ``K == 0``).
    """
    if not isinstance(expr, str):
        raise TypeError("expression must be a string")
    return ThetaExpr(_Parser(expr, p).parse(), p, expr)


@dataclass(frozen=True)
class ThetaMap:
    exprs: tuple
    p: int

    def __post_init__(self):
        if len(self.exprs) < 1:
            raise ValueError("ThetaMap needs at least one expression")
        for e in self.exprs:
            if e.p != self.p:
                raise ValueError("all expressions must share the parameter dimension")

    @classmethod
    def from_strings(cls, strings, p):
        return cls(tuple(parse(s, p) for s in strings), p)

    @property
    def Q(self):
        return len(self.exprs)

    @property
    def sources(self):
        return [e.source for e in self.exprs]

    def __call__(self, mu):
        return eval_theta(self, mu)

    def is_affine(self):
        return all(e.is_affine() for e in self.exprs)

    def affine_parts(self):
        """``(offset, J)`` with ``Theta(mu) = offset + J @ mu`` for affine maps."""
        if not self.is_affine():
            raise ValueError("Theta is not affine")
        offset = np.zeros(self.Q)
        J = np.zeros((self.Q, self.p))
        for q, e in enumerate(self.exprs):
            for k, v in e.polynomial().items():
                if sum(k) == 0:
                    offset[q] = float(v)
                else:
                    J[q, k.index(1)] = float(v)
        return offset, J


def eval_theta(theta_map, mu):
    """Coefficient vector ``psi = Theta(mu)``."""
    mu = np.asarray(mu, dtype=float).ravel()
    if mu.size != theta_map.p:
        raise ValueError(f"mu has dimension {mu.size}, expected {theta_map.p}")
    return np.array([e.evaluate(mu) for e in theta_map.exprs])


# ---------------------------------------------------------------------------
# 1D convexity classification


def poly1d_eval(coeffs, x):
    v = 0.0
    for c in reversed(coeffs):
        v = v * x + float(c)
    return v


def poly1d_deriv(coeffs):
    return [i * c for i, c in enumerate(coeffs)][1:] or [Fraction(0)]


def _bernstein(coeffs, a, b):
    # substitute x = a + (b - a) t, then convert power basis in t to Bernstein
    n = len(coeffs) - 1
    a, w = Fraction(a), Fraction(b) - Fraction(a)
    t_coeffs = [Fraction(0)] * (n + 1)
    for i, c in enumerate(coeffs):
        if c == 0:
            continue
        for j in range(i + 1):
            t_coeffs[j] += c * comb(i, j) * a ** (i - j) * w ** j
    return [
        sum((Fraction(comb(k, i), comb(n, i)) * t_coeffs[i] for i in range(k + 1)), Fraction(0))
        for k in range(n + 1)
    ]


def _nonneg_on(coeffs, a, b, depth=8):
    """True only if the polynomial is provably >= 0 on [a, b]."""
    bern = _bernstein(coeffs, a, b)
    if all(c >= 0 for c in bern):
        return True
    if bern[0] < 0 or bern[-1] < 0 or depth == 0:
        return False
    mid = (Fraction(a) + Fraction(b)) / 2
    return _nonneg_on(coeffs, a, mid, depth - 1) and _nonneg_on(coeffs, mid, b, depth - 1)


def classify_coeffs(coeffs, interval):
    if len(coeffs) <= 2 or all(c == 0 for c in coeffs[2:]):
        return "affine"
    a, b = (Fraction(float(v)) for v in interval)
    second = poly1d_deriv(poly1d_deriv(coeffs))
    if _nonneg_on(second, a, b):
        return "convex"
    if _nonneg_on([-c for c in second], a, b):
        return "concave"
    return "unknown"


def classify_monotone_convex(expr, interval, param=None):
    """Sound shape classification of a single-parameter expression on an interval.

    Returns one of ``"affine"``, ``"convex"``, ``"concave"``, ``"unknown"``.
    A non-``unknown`` answer is proven with exact rational arithmetic
    (Bernstein coefficients of the second derivative, with subdivision).
    """
    used = expr.params()
    if param is None:
        if len(used) > 1:
            raise ValueError("expression depends on more than one parameter")
        param = used[0] if used else 1
    elif any(j != param for j in used):
        raise ValueError("expression depends on parameters other than the requested one")
    fixed = {j: 0.0 for j in range(1, expr.p + 1) if j != param}
    return classify_coeffs(expr.restrict(param, fixed), interval)
