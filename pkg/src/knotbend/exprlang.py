"""Symbolic expressions in one variable ``u``.

Source text is parsed once into an immutable tree, which can then be
differentiated symbolically and evaluated many times on numpy arrays.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := "-" factor | power
    power  := atom ("^" factor)?
    atom   := number | "u" | "pi" | "e" | ident "(" expr ")" | "(" expr ")"

Multiplication is always explicit: ``2*cos(2*u)``, never ``2cos(2u)``.
"""

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .quadrature import cumulative_simpson

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "abs")
CONSTANTS = {"pi": math.pi, "e": math.e}


class ParseError(ValueError):
    """Source text does not match the expression grammar."""

    def __init__(self, offset, message, token=""):
        self.offset = offset
        self.message = message
        self.token = token
        where = f" near {token!r}" if token else ""
        super().__init__(f"{message} at offset {offset}{where}")


class DomainError(ArithmeticError):
    """An expression was evaluated outside its domain."""

    def __init__(self, message, node=None):
        self.node = node
        self.offset = getattr(node, "pos", None)
        loc = f" (source offset {self.offset})" if self.offset is not None else ""
        super().__init__(f"{message}{loc}")


class Expression:
    """Base class for expression tree nodes."""

    precedence = 5

    def __call__(self, u):
        return evaluate(self, u)

    def __str__(self):
        return to_source(self)


@dataclass(frozen=True, eq=True)
class Const(Expression):
    value: float
    name: str = field(default=None, compare=False)
    pos: int = field(default=None, compare=False, repr=False)

    @property
    def precedence(self):
        return 3 if self.value < 0 else 5


@dataclass(frozen=True, eq=True)
class Var(Expression):
    pos: int = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, eq=True)
class Neg(Expression):
    arg: Expression
    pos: int = field(default=None, compare=False, repr=False)
    precedence = 3


@dataclass(frozen=True, eq=True)
class BinOp(Expression):
    op: str
    left: Expression
    right: Expression
    pos: int = field(default=None, compare=False, repr=False)

    @property
    def precedence(self):
        return {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}[self.op]


@dataclass(frozen=True, eq=True)
class Func(Expression):
    name: str
    arg: Expression
    pos: int = field(default=None, compare=False, repr=False)


# --------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(source):
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        if source[pos:].strip() == "":
            break
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(source[pos:]) - len(source[pos:].lstrip()))
            raise ParseError(bad, "unexpected character", source[bad])
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def fail(self, message, tok=None):
        kind, text, pos = tok or self.tok
        if kind == "end":
            raise ParseError(pos, message or "unexpected end of input")
        raise ParseError(pos, message, text)

    def expect(self, text):
        kind, value, pos = self.tok
        if kind == "op" and value == text:
            return self.advance()
        if kind == "end":
            self.fail(f"expected {text!r} but input ended")
        self.fail(f"expected {text!r}")

    def parse(self):
        node = self.expr()
        if self.tok[0] != "end":
            self.fail("unexpected trailing input")
        return node

    def expr(self):
        node = self.term()
        while self.tok[0] == "op" and self.tok[1] in "+-":
            _, op, pos = self.advance()
            node = BinOp(op, node, self.term(), pos=pos)
        return node

    def term(self):
        node = self.factor()
        while self.tok[0] == "op" and self.tok[1] in "*/":
            _, op, pos = self.advance()
            node = BinOp(op, node, self.factor(), pos=pos)
        return node

    def factor(self):
        if self.tok[0] == "op" and self.tok[1] == "-":
            _, _, pos = self.advance()
            return Neg(self.factor(), pos=pos)
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok[0] == "op" and self.tok[1] == "^":
            _, _, pos = self.advance()
            return BinOp("^", base, self.factor(), pos=pos)
        return base

    def atom(self):
        kind, text, pos = self.tok
        if kind == "num":
            self.advance()
            return Const(float(text), pos=pos)
        if kind == "ident":
            self.advance()
            if text == "u":
                return Var(pos=pos)
            if text in CONSTANTS:
                return Const(CONSTANTS[text], name=text, pos=pos)
            if text not in FUNCTIONS:
                raise ParseError(pos, f"unknown identifier {text!r}", text)
            if not (self.tok[0] == "op" and self.tok[1] == "("):
                self.fail(f"expected '(' after function {text!r}")
            self.advance()
            arg = self.expr()
            if self.tok[0] == "op" and self.tok[1] == ",":
                self.fail(f"function {text!r} takes exactly one argument")
            self.expect(")")
            return Func(text, arg, pos=pos)
        if kind == "op" and text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            self.fail("unexpected end of input")
        self.fail("expected a number, 'u', a constant, a function or '('")


def parse(source):
    """Parse ``source`` into an :class:`Expression`.

    Raises :class:`ParseError` carrying the offending offset.
    """
    return _Parser(source).parse()


# --------------------------------------------------------------------------
# printing


def to_source(e):
    """Render ``e`` as source text that parses back to an equal-valued tree."""
    if isinstance(e, Const):
        if e.name is not None:
            return e.name
        text = repr(float(e.value))
        return f"({text})" if e.value < 0 else text
    if isinstance(e, Var):
        return "u"
    if isinstance(e, Func):
        return f"{e.name}({to_source(e.arg)})"
    if isinstance(e, Neg):
        inner = to_source(e.arg)
        if e.arg.precedence < 3:
            inner = f"({inner})"
        return f"-{inner}"
    if e.op == "^":
        left = to_source(e.left)
        if e.left.precedence < 5:
            left = f"({left})"
        right = to_source(e.right)
        if e.right.precedence < 3:
            right = f"({right})"
        return f"{left}^{right}"
    prec = e.precedence
    left = to_source(e.left)
    if e.left.precedence < prec:
        left = f"({left})"
    right = to_source(e.right)
    if e.right.precedence <= prec:
        right = f"({right})"
    return f"{left}{e.op}{right}"


# --------------------------------------------------------------------------
# evaluation


def _check(bad, message, node):
    if np.any(bad):
        raise DomainError(message, node)


def _eval(e, u):
    if isinstance(e, Const):
        return np.full_like(u, e.value)
    if isinstance(e, Var):
        return u
    if isinstance(e, Neg):
        return -_eval(e.arg, u)
    if isinstance(e, Func):
        x = _eval(e.arg, u)
        name = e.name
        if name == "log":
            _check(x <= 0, "log of a non-positive value", e)
            return np.log(x)
        if name == "sqrt":
            _check(x < 0, "sqrt of a negative value", e)
            return np.sqrt(x)
        if name == "tan":
            _check(np.cos(x) == 0, "tan at a pole", e)
        with np.errstate(over="ignore"):
            return getattr(np, name)(x)
    a = _eval(e.left, u)
    b = _eval(e.right, u)
    op = e.op
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        _check(b == 0, "division by zero", e)
        return a / b
    _check((a == 0) & (b < 0), "zero raised to a negative power", e)
    _check((a < 0) & (b != np.round(b)), "negative base with non-integer exponent", e)
    return np.power(a, b)


def evaluate(e, u):
    """Evaluate ``e`` at ``u`` (a float or an array of floats).

    Raises :class:`DomainError` naming the failing node's source offset.
    """
    arr = np.asarray(u, dtype=float)
    out = _eval(e, arr)
    if arr.ndim == 0:
        return float(out)
    return np.broadcast_to(out, arr.shape).copy()


def depends_on_u(e):
    if isinstance(e, Var):
        return True
    if isinstance(e, Const):
        return False
    if isinstance(e, (Neg, Func)):
        return depends_on_u(e.arg)
    return depends_on_u(e.left) or depends_on_u(e.right)


def constant_value(e):
    """Value of an expression that must not depend on ``u``."""
    if depends_on_u(e):
        raise ValueError(f"expression {to_source(e)!r} is not constant")
    return evaluate(e, 0.0)


# --------------------------------------------------------------------------
# differentiation

ZERO = Const(0.0)
ONE = Const(1.0)


def _is(e, value):
    return isinstance(e, Const) and e.value == value


def _neg(a):
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _add(a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    return BinOp("+", a, b)


def _sub(a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if _is(b, 0):
        return a
    if _is(a, 0):
        return _neg(b)
    return BinOp("-", a, b)


def _mul(a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if _is(a, 0) or _is(b, 0):
        return ZERO
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    if _is(a, -1):
        return _neg(b)
    if _is(b, -1):
        return _neg(a)
    return BinOp("*", a, b)


def _div(a, b):
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0:
        return Const(a.value / b.value)
    if _is(a, 0):
        return ZERO
    if _is(b, 1):
        return a
    return BinOp("/", a, b)


def _pow(a, b):
    if _is(b, 1):
        return a
    if _is(b, 0):
        return ONE
    return BinOp("^", a, b)


def differentiate(e):
    """Symbolic derivative ``de/du``.

    Only literal-only subtrees are folded; the result is correct by value,
    not canonical in shape.  The derivative of ``abs(f)`` is written as
    ``f' * abs(f) / f`` so that evaluating it at ``f = 0`` raises
    :class:`DomainError` rather than returning a one-sided value.
    """
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Neg):
        return _neg(differentiate(e.arg))
    if isinstance(e, Func):
        a = e.arg
        da = differentiate(a)
        if _is(da, 0):
            return ZERO
        name = e.name
        if name == "sin":
            outer = Func("cos", a)
        elif name == "cos":
            outer = _neg(Func("sin", a))
        elif name == "tan":
            outer = _div(ONE, _pow(Func("cos", a), Const(2.0)))
        elif name == "exp":
            outer = e
        elif name == "log":
            return _div(da, a)
        elif name == "sqrt":
            return _div(da, _mul(Const(2.0), e))
        elif name == "abs":
            return _mul(da, _div(e, a))
        else:  # pragma: no cover - parser rejects other names
            raise ValueError(f"no derivative rule for {name}")
        return _mul(outer, da)

    a, b = e.left, e.right
    op = e.op
    if op in "+-":
        da, db = differentiate(a), differentiate(b)
        return _add(da, db) if op == "+" else _sub(da, db)
    if op == "*":
        return _add(_mul(differentiate(a), b), _mul(a, differentiate(b)))
    if op == "/":
        num = _sub(_mul(differentiate(a), b), _mul(a, differentiate(b)))
        return _div(num, _pow(b, Const(2.0)))
    # power
    if not depends_on_u(b):
        return _mul(_mul(b, _pow(a, _sub(b, ONE))), differentiate(a))
    if not depends_on_u(a):
        return _mul(_mul(e, Func("log", a)), differentiate(b))
    inner = _add(
        _mul(differentiate(b), Func("log", a)),
        _div(_mul(b, differentiate(a)), a),
    )
    return _mul(e, inner)


def derivatives(e, order):
    """``[e, e', ..., e^(order)]``."""
    out = [e]
    for _ in range(order):
        out.append(differentiate(out[-1]))
    return out


# --------------------------------------------------------------------------
# numeric antiderivative


def antiderivative_table(e, period, n, constant=0.0, panels=2):
    """Tabulate ``F(u_i) = constant + int_0^{u_i} e(u) du`` at ``u_i = i*period/n``.

    Uses composite Simpson with ``panels`` double-intervals inside every grid
    interval, so the error decays as ``n**-4``.  Returns ``n + 1`` values,
    the last one at ``u = period``.
    """
    if n < 16 or n % 2:
        raise ValueError(f"sample count must be even and >= 16, got {n}")
    breaks = np.linspace(0.0, period, n + 1)
    func = e if callable(e) else (lambda u: evaluate(e, u))
    return cumulative_simpson(func, breaks, panels=panels, constant=constant)
