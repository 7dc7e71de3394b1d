"""Symbolic expression kernel.

Expressions are plain (immutable) sympy trees built from a restricted
vocabulary: exact rationals, real symbols, opaque functions of one variable,
derivative nodes, ``exp``/``ln``/``sin``/``cos``/``sqrt`` and the arithmetic
operators.  This module owns the text grammar, the printer, the canonical
form used for every identity check, numeric evaluation, small linear solves
and a deliberately narrow antiderivative.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Mapping

import numpy as np
import sympy as sp
from sympy.core.function import AppliedUndef

__all__ = [
    "ParseError",
    "ArityError",
    "SubstitutionError",
    "EvaluationError",
    "UndecidableError",
    "SingularSystemError",
    "NonlinearSystemError",
    "NotClosedForm",
    "ZeroTest",
    "symbol",
    "function",
    "T",
    "parse",
    "to_text",
    "diff",
    "substitute",
    "bind_function",
    "simplify",
    "zero_test",
    "is_zero",
    "equal",
    "evaluate",
    "solve_linear",
    "antiderivative",
    "sqrt_simplify",
    "to_tree",
    "from_tree",
    "to_latex",
]


class ParseError(ValueError):
    """Malformed expression text; ``offset`` is the 0-based character position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class ArityError(ParseError):
    pass


class SubstitutionError(ValueError):
    pass


class EvaluationError(ValueError):
    pass


class UndecidableError(EvaluationError):
    pass


class SingularSystemError(ValueError):
    pass


class NonlinearSystemError(ValueError):
    pass


@dataclass(frozen=True)
class NotClosedForm:
    """Returned by :func:`antiderivative` when the integrand is outside the
    supported family.  It is a value, not an error."""

    integrand: sp.Expr
    reason: str = ""

    def __bool__(self) -> bool:
        return False


@dataclass(frozen=True)
class ZeroTest:
    value: bool
    path: str  # "canonical" or "sampling"
    samples: int = 0

    def __bool__(self) -> bool:
        return self.value


# ---------------------------------------------------------------------------
# vocabulary


@lru_cache(maxsize=None)
def symbol(name: str) -> sp.Symbol:
    return sp.Symbol(name, real=True)


@lru_cache(maxsize=None)
def function(name: str):
    return sp.Function(name, real=True)


T = symbol("t")

_ELEMENTARY = {
    "exp": sp.exp,
    "ln": sp.log,
    "log": sp.log,
    "sin": sp.sin,
    "cos": sp.cos,
    "sqrt": sp.sqrt,
    "abs": sp.Abs,
}
_RESERVED = {"Pi": sp.pi}


# ---------------------------------------------------------------------------
# parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>\*\*|[-+*/^(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            offset = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[offset]!r}", offset)
        kind = m.lastgroup
        value = m.group(kind)
        start = m.start(kind)
        if value == "**":
            value = "^"
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.tok
        if val != value or kind == "end":
            what = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {value!r}, found {what}", pos)
        return self.advance()

    def fail(self):
        kind, val, pos = self.tok
        if kind == "end":
            raise ParseError("unexpected end of input", pos)
        raise ParseError(f"unexpected token {val!r}", pos)

    def parse(self) -> sp.Expr:
        e = self.expr()
        if self.tok[0] != "end":
            self.fail()
        return e

    def expr(self):
        e = self.term()
        while self.tok[1] in ("+", "-") and self.tok[0] == "op":
            op = self.advance()[1]
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self):
        e = self.factor()
        while self.tok[1] in ("*", "/") and self.tok[0] == "op":
            op = self.advance()[1]
            rhs = self.factor()
            e = e * rhs if op == "*" else e / rhs
        return e

    def factor(self):
        if self.tok[0] == "op" and self.tok[1] in ("+", "-"):
            op = self.advance()[1]
            e = self.factor()
            return -e if op == "-" else e
        base = self.base()
        if self.tok[0] == "op" and self.tok[1] == "^":
            self.advance()
            return base ** self.factor()  # right associative, allows x^-1
        return base

    def base(self):
        kind, val, pos = self.tok
        if kind == "num":
            self.advance()
            return sp.Rational(val)
        if kind == "op" and val == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if kind == "name":
            self.advance()
            if self.tok[1] == "(" and self.tok[0] == "op":
                return self.call(val, pos)
            if val in _RESERVED:
                return _RESERVED[val]
            if val in _ELEMENTARY or val == "diff":
                raise ParseError(f"function {val!r} needs arguments", self.tok[2])
            return symbol(val)
        self.fail()

    def call(self, name: str, pos: int):
        self.expect("(")
        args = [self.expr()]
        while self.tok[1] == "," and self.tok[0] == "op":
            self.advance()
            args.append(self.expr())
        self.expect(")")
        if name == "diff":
            if len(args) not in (2, 3):
                raise ArityError("diff takes 2 or 3 arguments", pos)
            var = args[1]
            if not isinstance(var, sp.Symbol):
                raise ParseError("diff variable must be a name", pos)
            order = 1
            if len(args) == 3:
                if not (args[2].is_Integer and args[2] > 0):
                    raise ParseError("diff order must be a positive integer", pos)
                order = int(args[2])
            return sp.diff(args[0], var, order)
        if name in _RESERVED:
            raise ParseError(f"{name!r} is reserved", pos)
        if len(args) != 1:
            raise ArityError(f"{name} takes exactly one argument, got {len(args)}", pos)
        if name in _ELEMENTARY:
            return _ELEMENTARY[name](args[0])
        return function(name)(args[0])


def parse(text: str) -> sp.Expr:
    """Parse expression text.

    >>> parse("R0*exp(w*t)")
    R0*exp(t*w)
    """
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# printer

_P_ADD, _P_MUL, _P_NEG, _P_POW, _P_ATOM = 10, 20, 25, 30, 40


def to_text(e) -> str:
    """Render in the parser's grammar (``^`` powers, ``diff(f(t),t,n)``)."""
    return _pr(sp.sympify(e))[0]


def _wrap(pair, prec):
    s, p = pair
    return f"({s})" if p < prec else s


def _pr(e) -> tuple[str, int]:
    if e.is_Integer:
        return (str(e.p), _P_ATOM) if e >= 0 else (str(e.p), _P_NEG)
    if e.is_Rational:
        s = f"{e.p}/{e.q}"
        return s, (_P_MUL if e > 0 else _P_NEG)
    if e.is_Float:
        return _pr(sp.Rational(str(e)))
    if e is sp.pi:
        return "Pi", _P_ATOM
    if e is sp.E:
        return "exp(1)", _P_ATOM
    if e.is_Symbol:
        return e.name, _P_ATOM
    if isinstance(e, sp.Derivative):
        inner = to_text(e.expr)
        for var, n in e.variable_count:
            inner = f"diff({inner},{var.name}" + (f",{n})" if n != 1 else ")")
        return inner, _P_ATOM
    if isinstance(e, AppliedUndef):
        return f"{e.func.__name__}({', '.join(to_text(a) for a in e.args)})", _P_ATOM
    if isinstance(e, sp.exp):
        return f"exp({to_text(e.args[0])})", _P_ATOM
    if isinstance(e, sp.log):
        return f"ln({to_text(e.args[0])})", _P_ATOM
    if isinstance(e, (sp.sin, sp.cos)):
        return f"{type(e).__name__}({to_text(e.args[0])})", _P_ATOM
    if isinstance(e, sp.Abs):
        return f"abs({to_text(e.args[0])})", _P_ATOM
    if e.is_Add:
        terms = e.as_ordered_terms()
        out = _pr(terms[0])[0]
        for term in terms[1:]:
            coeff, _ = term.as_coeff_Mul()
            if coeff.is_negative:
                out += " - " + _wrap(_pr(-term), _P_MUL)
            else:
                out += " + " + _wrap(_pr(term), _P_ADD + 1)
        return out, _P_ADD
    if e.is_Mul:
        coeff, rest = e.as_coeff_Mul()
        if coeff.is_negative:
            return "-" + _wrap(_pr(-e), _P_MUL), _P_NEG
        num, den = [], []
        if coeff != 1:
            if coeff.p != 1:
                num.append(sp.Integer(coeff.p))
            if coeff.q != 1:
                den.append(sp.Integer(coeff.q))
        for f in sp.Mul.make_args(rest):
            b, x = f.as_base_exp()
            if x.is_Rational and x.is_negative and not isinstance(f, sp.exp):
                den.append(b ** (-x))
            else:
                num.append(f)
        if num == [sp.Integer(1)]:
            num = []
        ns = "*".join(_wrap(_pr(f), _P_MUL) for f in num) or "1"
        if not den:
            return ns, _P_MUL
        if len(den) == 1:
            ds = _wrap(_pr(den[0]), _P_POW)
        else:
            ds = "(" + "*".join(_wrap(_pr(f), _P_MUL) for f in den) + ")"
        return f"{ns}/{ds}", _P_MUL
    if e.is_Pow:
        b, x = e.args
        if x == sp.S.Half:
            return f"sqrt({to_text(b)})", _P_ATOM
        if x.is_Rational and x.is_negative:
            return "1/" + _wrap(_pr(b ** (-x)), _P_POW), _P_MUL
        xs = _wrap(_pr(x), _P_ATOM)
        return f"{_wrap(_pr(b), _P_ATOM)}^{xs}", _P_POW
    raise TypeError(f"cannot print {type(e).__name__}: {e}")


def to_latex(e) -> str:
    return sp.latex(sp.sympify(e))


# structured (machine) rendering ------------------------------------------------


def to_tree(e):
    """Nested JSON-ready rendering: ``{"op": ..., "args": [...]}``."""
    e = sp.sympify(e)
    if e.is_Rational:
        return {"op": "num", "value": f"{e.p}/{e.q}" if e.q != 1 else str(e.p)}
    if e is sp.pi:
        return {"op": "sym", "name": "Pi"}
    if e is sp.E:
        return {"op": "exp", "args": [to_tree(sp.Integer(1))]}
    if e.is_Symbol:
        return {"op": "sym", "name": e.name}
    if isinstance(e, sp.Derivative):
        (var, n), = e.variable_count
        return {"op": "diff", "args": [to_tree(e.expr)], "var": var.name, "order": int(n)}
    if isinstance(e, AppliedUndef):
        return {"op": "call", "name": e.func.__name__, "args": [to_tree(a) for a in e.args]}
    if isinstance(e, sp.exp):
        return {"op": "exp", "args": [to_tree(e.args[0])]}
    if isinstance(e, sp.log):
        return {"op": "ln", "args": [to_tree(e.args[0])]}
    if isinstance(e, (sp.sin, sp.cos)):
        return {"op": type(e).__name__, "args": [to_tree(e.args[0])]}
    if isinstance(e, sp.Abs):
        return {"op": "abs", "args": [to_tree(e.args[0])]}
    if e.is_Add:
        return {"op": "add", "args": [to_tree(a) for a in e.as_ordered_terms()]}
    if e.is_Mul:
        return {"op": "mul", "args": [to_tree(a) for a in e.as_ordered_factors()]}
    if e.is_Pow:
        return {"op": "pow", "args": [to_tree(e.args[0]), to_tree(e.args[1])]}
    raise TypeError(f"cannot serialize {e}")


def from_tree(node) -> sp.Expr:
    op = node["op"]
    if op == "num":
        return sp.Rational(node["value"])
    if op == "sym":
        return sp.pi if node["name"] == "Pi" else symbol(node["name"])
    args = [from_tree(a) for a in node.get("args", [])]
    if op == "add":
        return sp.Add(*args)
    if op == "mul":
        return sp.Mul(*args)
    if op == "pow":
        return args[0] ** args[1]
    if op == "diff":
        return sp.diff(args[0], symbol(node["var"]), node["order"])
    if op == "call":
        return function(node["name"])(*args)
    if op in _ELEMENTARY:
        return _ELEMENTARY[op](*args)
    raise ValueError(f"unknown node op {op!r}")


# ---------------------------------------------------------------------------
# calculus and substitution


def diff(e, var: sp.Symbol, order: int = 1) -> sp.Expr:
    if order < 1:
        raise ValueError("order must be a positive integer")
    return sp.diff(sp.sympify(e), var, order)


def _pattern_parts(pattern):
    """Split a pattern into (atom, exponent)."""
    if pattern.is_Pow and pattern.exp.is_Integer and pattern.exp > 0:
        base, n = pattern.base, int(pattern.exp)
    else:
        base, n = pattern, 1
    if not (base.is_Symbol or isinstance(base, (AppliedUndef, sp.Derivative))):
        raise SubstitutionError(f"unsupported pattern shape: {pattern}")
    return base, n


def substitute(e, pattern, replacement) -> sp.Expr:
    """Replace every syntactic occurrence of ``pattern`` in ``e``.

    A derivative pattern also rewrites higher derivatives of the same function
    by differentiating the replacement once (``R'' -> d/dt(H R)``); the new
    first derivatives this exposes need another pass, which is up to the
    caller.  An integer-power pattern ``f^m`` rewrites ``f^n`` as
    ``replacement^(n//m) * f^(n%m)``.
    """
    e = sp.sympify(e)
    pattern = sp.sympify(pattern)
    replacement = sp.sympify(replacement)
    base, m = _pattern_parts(pattern)

    if m == 1:
        if isinstance(base, sp.Derivative):
            (var, order), = base.variable_count
            inner = base.expr

            def rewrite(node):
                if isinstance(node, sp.Derivative) and node.expr == inner and len(node.variable_count) == 1:
                    v, n = node.variable_count[0]
                    if v == var and n > order:
                        return sp.diff(replacement, var, n - order)
                return None

            higher = {d: rewrite(d) for d in e.atoms(sp.Derivative)}
            higher = {k: v for k, v in higher.items() if v is not None}
            e = e.xreplace(higher)
        return _settle_derivatives(e.xreplace({base: replacement}))

    def rewrite_pow(node):
        if node.is_Pow and node.base == base and node.exp.is_Integer:
            n = int(node.exp)
            q, r = divmod(abs(n), m)
            if q == 0:
                return node
            out = replacement**q * base**r
            return out if n > 0 else 1 / out
        return node

    return e.replace(lambda x: x.is_Pow and x.base == base, rewrite_pow)


def _settle_derivatives(e):
    # derivatives of a replaced application are no longer opaque
    done = {d: d.doit() for d in e.atoms(sp.Derivative) if not isinstance(d.expr, AppliedUndef)}
    return e.xreplace(done) if done else e


def bind_function(e, name, value, var: sp.Symbol = T) -> sp.Expr:
    """Replace the opaque function ``name(var)`` and all its derivatives by
    ``value`` (an expression in ``var``) and its derivatives."""
    f = function(name) if isinstance(name, str) else name
    value = sp.sympify(value)
    app = f(var)
    e = sp.sympify(e)
    mapping = {}
    for d in e.atoms(sp.Derivative):
        if d.expr == app:
            (v, n), = d.variable_count
            mapping[d] = sp.diff(value, v, n)
    e = e.xreplace(mapping)
    return e.xreplace({app: value})


def sqrt_simplify(e) -> sp.Expr:
    """Split and denest square roots taking the principal branch
    (``sqrt(k*exp(-2*w*t)/(4*pi)) -> sqrt(k)*exp(-t*w)/(2*sqrt(pi))``)."""
    e = sp.expand_power_base(sp.sympify(e), force=True)
    return sp.powdenest(e, force=True)


# ---------------------------------------------------------------------------
# canonical form


_OPAQUE = (AppliedUndef, sp.Derivative)


class _Kernelizer:
    """Maps an expression to a rational function in kernel dummies."""

    def __init__(self):
        self.exp_terms: dict[sp.Expr, set] = {}
        self.root_exps: dict[sp.Expr, set] = {}
        self.kernels: set = set()
        self.trig_args: set = set()
        self.safe = True

    # first pass: discover kernels --------------------------------------
    def scan(self, e):
        if e.is_Rational or e.is_Symbol:
            return
        if e.is_Add or e.is_Mul:
            for a in e.args:
                self.scan(a)
            return
        if e.is_Pow:
            b, x = e.args
            if x.is_Integer:
                self.scan(b)
                return
            if x.is_Rational:
                b = simplify(b)
                self.root_exps.setdefault(b, set()).add(x.q)
                self.safe = False
                return
            self.kernels.add(self._generic(e))
            self.safe = False
            return
        if isinstance(e, sp.exp):
            for m, c in self._exp_split(e.args[0]):
                self.exp_terms.setdefault(m, set()).add(c)
            return
        if isinstance(e, (sp.sin, sp.cos)):
            self.trig_args.add(simplify(e.args[0]))
            return
        if isinstance(e, _OPAQUE) or e.is_NumberSymbol:
            self.kernels.add(e)
            return
        self.safe = False
        self.kernels.add(self._generic(e))

    @staticmethod
    def _generic(e):
        return e.func(*[simplify(a) for a in e.args])

    @staticmethod
    def _exp_split(arg):
        arg = sp.expand(simplify(arg))
        out = []
        for term in sp.Add.make_args(arg):
            c, m = term.as_coeff_Mul()
            if not c.is_Rational:
                c, m = sp.Integer(1), term
            out.append((m, c))
        return out

    # build dummies ------------------------------------------------------
    def build(self):
        names = []
        self.exp_scale = {}
        for m, coeffs in self.exp_terms.items():
            L = 1
            for c in coeffs:
                L = math.lcm(L, int(c.q))
            self.exp_scale[m] = L
            names.append(("exp", m, sp.exp(m / L)))
        self.root_scale = {}
        for b, qs in self.root_exps.items():
            L = 1
            for q in qs:
                L = math.lcm(L, q)
            self.root_scale[b] = L
            names.append(("root", b, b ** sp.Rational(1, L)))
        for a in self.trig_args:
            names.append(("sin", a, sp.sin(a)))
            names.append(("cos", a, sp.cos(a)))
        for k in self.kernels:
            names.append(("kernel", k, k))
        names.sort(key=lambda item: sp.default_sort_key(item[2]))
        self.dummy = {}
        self.back = {}
        for i, (kind, key, value) in enumerate(names):
            d = sp.Symbol(f"_K{i:03d}")
            self.dummy[(kind, key)] = d
            self.back[d] = value
        # trig arguments sharing symbols with one another break independence
        args = list(self.trig_args)
        for i in range(len(args)):
            for j in range(i + 1, len(args)):
                if args[i].free_symbols & args[j].free_symbols:
                    self.safe = False

    # second pass: rewrite --------------------------------------------------
    def rewrite(self, e):
        if e.is_Rational or e.is_Symbol:
            return e
        if e.is_Add:
            return sp.Add(*[self.rewrite(a) for a in e.args])
        if e.is_Mul:
            return sp.Mul(*[self.rewrite(a) for a in e.args])
        if e.is_Pow:
            b, x = e.args
            if x.is_Integer:
                return self.rewrite(b) ** x
            if x.is_Rational:
                b = simplify(b)
                L = self.root_scale[b]
                return self.dummy[("root", b)] ** int(x * L)
            return self.dummy[("kernel", self._generic(e))]
        if isinstance(e, sp.exp):
            out = sp.Integer(1)
            for m, c in self._exp_split(e.args[0]):
                out *= self.dummy[("exp", m)] ** int(c * self.exp_scale[m])
            return out
        if isinstance(e, (sp.sin, sp.cos)):
            kind = "sin" if isinstance(e, sp.sin) else "cos"
            return self.dummy[(kind, simplify(e.args[0]))]
        if isinstance(e, _OPAQUE) or e.is_NumberSymbol:
            return self.dummy[("kernel", e)]
        return self.dummy[("kernel", self._generic(e))]


def _reduce_trig(poly_expr, pairs):
    for s, c in pairs:
        if sp.degree(poly_expr, s) >= 2:
            poly_expr = sp.rem(sp.expand(poly_expr), s**2 + c**2 - 1, s)
    return sp.expand(poly_expr)


def _canonical_pass(e):
    kz = _Kernelizer()
    kz.scan(e)
    kz.build()
    r = kz.rewrite(e)
    pairs = [(kz.dummy[("sin", a)], kz.dummy[("cos", a)]) for a in kz.trig_args]
    r = sp.cancel(r)
    for _ in range(4):
        num, den = sp.fraction(r)
        num, den = _reduce_trig(num, pairs), _reduce_trig(den, pairs)
        r2 = sp.cancel(num / den)
        if r2 == r:
            break
        r = r2
    return r.xreplace(kz.back), kz.safe


@lru_cache(maxsize=65536)
def _canonical(e):
    safe = True
    for _ in range(8):
        new, ok = _canonical_pass(e)
        safe = safe and ok
        if new == e:
            break
        e = new
    return e, safe


def simplify(e) -> sp.Expr:
    """Canonical representative: a reduced ratio of polynomials over the
    transcendental kernels, with sin^2 -> 1 - cos^2 and exponentials merged."""
    return _canonical(sp.sympify(e))[0]


_SAMPLE_SEED = 0xC0540
_SAMPLE_POINTS = 20
_SAMPLE_TOL = 1e-9


def zero_test(e) -> ZeroTest:
    """Decide whether ``e`` vanishes identically.

    The canonical form decides whenever the expression stays rational in
    algebraically independent kernels; otherwise the expression is evaluated
    at 20 seeded random points (every free symbol and opaque kernel drawn
    from U[0.1, 2.0]).
    """
    e = sp.sympify(e)
    c, safe = _canonical(e)
    if c == 0:
        return ZeroTest(True, "canonical")
    if safe:
        return ZeroTest(False, "canonical")
    return _sample_zero(c)


def _sample_zero(e) -> ZeroTest:
    opaque = sorted(e.atoms(*_OPAQUE), key=sp.default_sort_key)
    # derivatives first so their inner function application is not rewritten
    opaque.sort(key=lambda a: not isinstance(a, sp.Derivative))
    names = {}
    for i, a in enumerate(opaque):
        names[a] = sp.Symbol(f"_S{i:03d}")
    e = e.xreplace({a: names[a] for a in opaque if isinstance(a, sp.Derivative)})
    e = e.xreplace({a: names[a] for a in opaque if not isinstance(a, sp.Derivative)})
    free = sorted(e.free_symbols, key=lambda s: s.name)
    rng = np.random.default_rng(_SAMPLE_SEED)
    used = 0
    for _ in range(_SAMPLE_POINTS):
        values = rng.uniform(0.1, 2.0, size=len(free))
        try:
            v = evaluate(e, {s: float(x) for s, x in zip(free, values)})
        except EvaluationError:
            continue
        used += 1
        if abs(v) >= _SAMPLE_TOL:
            return ZeroTest(False, "sampling", used)
    if used == 0:
        raise UndecidableError(f"evaluation singular at every sample point: {e}")
    return ZeroTest(True, "sampling", used)


def is_zero(e) -> bool:
    return zero_test(e).value


def equal(a, b) -> bool:
    return is_zero(sp.sympify(a) - sp.sympify(b))


# ---------------------------------------------------------------------------
# numeric evaluation

Number = float | int
Binding = Number | Callable[..., float]


def _normalize_bindings(bindings: Mapping) -> tuple[dict, dict]:
    """Split bindings into exact-node bindings and function-name bindings."""
    nodes, funcs = {}, {}
    for key, value in bindings.items():
        if isinstance(key, str):
            if key.isidentifier():
                funcs[key] = value
                nodes[symbol(key)] = value
                if key == "Pi":
                    nodes[sp.pi] = value
                continue
            key = parse(key)
        key = sp.sympify(key)
        if isinstance(key, sp.FunctionClass):
            funcs[key.__name__] = value
        else:
            nodes[key] = value
    return nodes, funcs


def evaluate(e, bindings: Mapping | None = None) -> float:
    """Evaluate to a double.

    ``bindings`` maps symbols, function names, function applications or
    derivative nodes (as sympy objects or text) to numbers or callables.  An
    unbound derivative of a callable-bound function falls back to central
    finite differences.
    """
    nodes, funcs = _normalize_bindings(bindings or {})
    with np.errstate(all="raise"):
        try:
            value = _ev(sp.sympify(e), nodes, funcs)
        except (ZeroDivisionError, OverflowError, FloatingPointError) as exc:
            raise EvaluationError(f"numeric failure: {exc}") from exc
    if isinstance(value, complex) or not math.isfinite(value):
        raise EvaluationError(f"non-finite value {value}")
    return float(value)


def _call(value, *args):
    return float(value(*args)) if callable(value) else float(value)


def _ev(e, nodes, funcs):
    if e in nodes:
        v = nodes[e]
        if isinstance(e, AppliedUndef):
            return _call(v, *[_ev(a, nodes, funcs) for a in e.args])
        if isinstance(e, sp.Derivative):
            (var, _), = e.variable_count
            return _call(v, _ev(var, nodes, funcs))
        return _call(v)
    if e.is_Number:
        if e.is_Rational:
            return e.p / e.q
        return float(e)
    if e.is_NumberSymbol:
        return float(e)
    if e.is_Symbol:
        raise EvaluationError(f"unbound symbol {e.name}")
    if isinstance(e, AppliedUndef):
        name = e.func.__name__
        if name not in funcs:
            raise EvaluationError(f"unbound function {name}")
        return _call(funcs[name], *[_ev(a, nodes, funcs) for a in e.args])
    if isinstance(e, sp.Derivative):
        (var, n), = e.variable_count
        inner = e.expr
        if isinstance(inner, AppliedUndef) and inner.func.__name__ in funcs and inner.args == (var,):
            from .numeric import fd_derivative

            f = funcs[inner.func.__name__]
            if not callable(f):
                return 0.0
            if n > 2:
                raise EvaluationError("finite-difference fallback supports order <= 2")
            return fd_derivative(lambda x: _call(f, x), _ev(var, nodes, funcs), n)
        raise EvaluationError(f"unbound derivative {to_text(e)}")
    if e.is_Add:
        return math.fsum(_ev(a, nodes, funcs) for a in e.args)
    if e.is_Mul:
        out = 1.0
        for a in e.args:
            out *= _ev(a, nodes, funcs)
        return out
    if e.is_Pow:
        b = _ev(e.base, nodes, funcs)
        x = e.exp
        if x.is_Integer:
            if b == 0 and x < 0:
                raise EvaluationError("division by zero")
            return b ** int(x)
        xv = _ev(x, nodes, funcs)
        if b < 0:
            raise EvaluationError(f"fractional power of negative number {b}")
        if b == 0 and xv < 0:
            raise EvaluationError("division by zero")
        return b**xv
    arg = _ev(e.args[0], nodes, funcs) if e.args else None
    if isinstance(e, sp.exp):
        return math.exp(arg)
    if isinstance(e, sp.log):
        if arg <= 0:
            raise EvaluationError(f"log of non-positive number {arg}")
        return math.log(arg)
    if isinstance(e, sp.sin):
        return math.sin(arg)
    if isinstance(e, sp.cos):
        return math.cos(arg)
    if isinstance(e, sp.Abs):
        return abs(arg)
    raise EvaluationError(f"cannot evaluate {type(e).__name__}")


# ---------------------------------------------------------------------------
# linear solve


def solve_linear(equations: Iterable, unknowns: Iterable) -> dict:
    """Solve residuals ``equations == 0`` for ``unknowns`` by Cramer's rule.

    Unknowns are symbols or function applications such as ``V(t)``; every
    residual must be affine in them.
    """
    eqs = [sp.sympify(e) for e in equations]
    unk = [sp.sympify(u) for u in unknowns]
    if len(eqs) != len(unk) or not 1 <= len(unk) <= 3:
        raise ValueError("need as many equations as unknowns (at most 3)")
    dummies = [sp.Dummy(f"x{i}") for i in range(len(unk))]
    for e in eqs:
        for u in unk:
            for d in e.atoms(sp.Derivative):
                if d.has(u):
                    raise NonlinearSystemError(f"unknown {u} appears differentiated")
    eqs = [e.xreplace(dict(zip(unk, dummies))) for e in eqs]
    n = len(unk)
    A = sp.zeros(n, n)
    b = sp.zeros(n, 1)
    zero = {d: 0 for d in dummies}
    for i, e in enumerate(eqs):
        for j, d in enumerate(dummies):
            coeff = simplify(sp.diff(e, d))
            if coeff.has(*dummies):
                raise NonlinearSystemError(f"equation {i} is not affine in {unk[j]}")
            A[i, j] = coeff
        b[i] = -simplify(e.xreplace(zero))
    det = simplify(A.det(method="berkowitz"))
    if is_zero(det):
        raise SingularSystemError("coefficient matrix is singular")
    solution = {}
    for j, u in enumerate(unk):
        Aj = A.copy()
        Aj[:, j] = b
        solution[u] = simplify(Aj.det(method="berkowitz") / det)
    return solution


# ---------------------------------------------------------------------------
# antiderivative


def antiderivative(e, var: sp.Symbol):
    """Closed-form antiderivative for finite sums of ``c*exp(a*var)``,
    ``c*var^n`` (n != -1) and ``c/var``; :class:`NotClosedForm` otherwise."""
    e = sp.sympify(e)
    if not e.has(var):
        return e * var
    expanded = sp.expand(simplify(e))
    out = []
    for term in sp.Add.make_args(expanded):
        c, dep = term.as_independent(var, as_Add=False)
        dep = sp.powsimp(dep, combine="exp")
        if dep == 1:
            out.append(c * var)
        elif dep == var:
            out.append(c * var**2 / 2)
        elif dep.is_Pow and dep.base == var and not dep.exp.has(var):
            if dep.exp == -1:
                out.append(c * sp.log(var))
            elif dep.exp.is_Rational:
                out.append(c * var ** (dep.exp + 1) / (dep.exp + 1))
            else:
                return NotClosedForm(e, f"symbolic exponent in {dep}")
        elif isinstance(dep, sp.exp):
            rate = sp.diff(dep.args[0], var)
            if rate.has(var) or is_zero(rate):
                return NotClosedForm(e, f"exponent of {dep} is not linear in {var}")
            out.append(c * dep / rate)
        else:
            return NotClosedForm(e, f"unsupported term {dep}")
    return sp.Add(*out)
