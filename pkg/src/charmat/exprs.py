"""Scalar expressions in ``t`` and ``eps``: parsing, evaluation, differentiation.

Grammar (whitespace ignored)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := unary ('^' factor)?        # right associative
    unary  := '-' unary | atom
    atom   := number | 't' | 'eps' | ident '(' expr ')' | '(' expr ')'

Functions: sin, cos, exp, log, sqrt, abs (and sign, which ``diff`` of abs
produces). Exponents must not depend on ``t``.

Evaluation is vectorized: ``evaluate(e, t, eps)`` accepts an array of t values
and returns complex128 values of the same shape.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .funcspace import Grid, SampledFunction

__all__ = [
    "Call",
    "Const",
    "BinOp",
    "Expression",
    "ExprDomainError",
    "ExprSyntaxError",
    "MatrixExpression",
    "Neg",
    "Sym",
    "diff",
    "evaluate",
    "parse",
    "sample_matrix",
    "to_text",
]

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "abs", "sign")


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at offset {position}" + (f" in {text!r}" if text else ""))


class ExprDomainError(ArithmeticError):
    def __init__(self, message: str, t=None, position: int | None = None):
        if position is not None and position < 0:
            position = None
        self.t = t
        self.position = position
        where = []
        if position is not None:
            where.append(f"offset {position}")
        if t is not None:
            where.append(f"t={t!r}")
        super().__init__(message + (f" ({', '.join(where)})" if where else ""))


# --------------------------------------------------------------------------
# AST


class Expression:
    __slots__ = ()

    def depends_on_t(self) -> bool:
        raise NotImplementedError


@dataclass(frozen=True)
class Const(Expression):
    value: float
    pos: int = field(default=-1, compare=False)

    def depends_on_t(self):
        return False


@dataclass(frozen=True)
class Sym(Expression):
    name: str  # 't' or 'eps'
    pos: int = field(default=-1, compare=False)

    def depends_on_t(self):
        return self.name == "t"


@dataclass(frozen=True)
class Neg(Expression):
    arg: Expression
    pos: int = field(default=-1, compare=False)

    def depends_on_t(self):
        return self.arg.depends_on_t()


@dataclass(frozen=True)
class BinOp(Expression):
    op: str  # one of + - * / ^
    left: Expression
    right: Expression
    pos: int = field(default=-1, compare=False)

    def depends_on_t(self):
        return self.left.depends_on_t() or self.right.depends_on_t()


@dataclass(frozen=True)
class Call(Expression):
    func: str
    arg: Expression
    pos: int = field(default=-1, compare=False)

    def depends_on_t(self):
        return self.arg.depends_on_t()


ZERO = Const(0.0)
ONE = Const(1.0)


# --------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", bad, text)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            what = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {what}", pos, self.text)

    def parse(self) -> Expression:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", pos, self.text)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            _, op, pos = self.take()
            e = BinOp(op, e, self.term(), pos)
        return e

    def term(self):
        e = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            _, op, pos = self.take()
            e = BinOp(op, e, self.factor(), pos)
        return e

    def factor(self):
        # unary minus binds looser than ^, so -t^2 is -(t^2)
        kind, val, pos = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Neg(self.factor(), pos)
        base = self.atom()
        if self.peek()[1] == "^":
            _, _, pos = self.take()
            exponent = self.factor()
            if exponent.depends_on_t():
                raise ExprSyntaxError("exponent must not depend on t", pos, self.text)
            return BinOp("^", base, exponent, pos)
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Const(float(val), pos)
        if kind == "name":
            if val in ("t", "eps"):
                return Sym(val, pos)
            if val == "pi":
                return Const(float(np.pi), pos)
            if val not in FUNCTIONS:
                raise ExprSyntaxError(f"unknown identifier {val!r}", pos, self.text)
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return Call(val, arg, pos)
        if val == "(":
            e = self.expr()
            self.expect(")")
            return e
        what = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {what}", pos, self.text)


def parse(text: str) -> Expression:
    """Parse `text` into an expression tree.

    Raises ExprSyntaxError carrying the offending offset, e.g. ``"2*+t"``
    fails at offset 2. The constant ``pi`` is accepted as a literal.
    """
    if isinstance(text, (int, float)):
        return Const(float(text))
    return _Parser(str(text)).parse()


# --------------------------------------------------------------------------
# printing

def to_text(e: Expression) -> str:
    """Unambiguous, fully parenthesized text that `parse` maps back to `e`."""
    if isinstance(e, Const):
        return repr(float(e.value)) if e.value >= 0 else f"(-{repr(-float(e.value))})"
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_text(e.arg)})"
    if isinstance(e, BinOp):
        return f"({to_text(e.left)}{e.op}{to_text(e.right)})"
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    raise TypeError(f"not an expression: {e!r}")


# --------------------------------------------------------------------------
# evaluation


def _bad(mask, t):
    if np.ndim(t) == 0:
        return t
    return np.broadcast_to(t, mask.shape)[mask][0]


def evaluate(e: Expression, t, eps: float = 0.0):
    """Evaluate at `t` (scalar or array) as complex values.

    log and sqrt use the principal branch. Division by zero, log(0) and
    zero raised to a negative power raise ExprDomainError naming the first
    offending t.
    """
    t_arr = np.asarray(t, dtype=float)
    out = _eval(e, t_arr, complex(eps))
    out = np.broadcast_to(out, t_arr.shape).astype(complex)
    return out if out.ndim else complex(out)


def _eval(e, t, eps):
    if isinstance(e, Const):
        return np.complex128(e.value)
    if isinstance(e, Sym):
        return t.astype(complex) if e.name == "t" else np.complex128(eps)
    if isinstance(e, Neg):
        return -_eval(e.arg, t, eps)
    if isinstance(e, BinOp):
        x = _eval(e.left, t, eps)
        y = _eval(e.right, t, eps)
        if e.op == "+":
            return x + y
        if e.op == "-":
            return x - y
        if e.op == "*":
            return x * y
        if e.op == "/":
            zero = np.broadcast_to(y == 0, np.broadcast(x, y, t).shape)
            if np.any(zero):
                raise ExprDomainError("division by zero", _bad(zero, t), e.pos)
            return x / y
        return _power(x, y, t, e.pos)
    if isinstance(e, Call):
        x = _eval(e.arg, t, eps)
        return _call(e.func, x, t, e.pos)
    raise TypeError(f"not an expression: {e!r}")


def _power(x, y, t, pos):
    bad = np.broadcast_to((x == 0) & (y.real < 0), np.broadcast(x, y, t).shape)
    if np.any(bad):
        raise ExprDomainError("zero raised to a negative power", _bad(bad, t), pos)
    y_real = np.real(y)
    if np.all(np.imag(y) == 0) and np.all(y_real == np.round(y_real)) and np.all(np.abs(y_real) <= 64):
        # integer powers by repeated multiplication keep exactness for negative bases
        return np.power(x, y_real.astype(int)) if np.ndim(y_real) else x ** int(y_real)
    with np.errstate(all="ignore"):
        return np.power(x, y)


def _call(name, x, t, pos):
    with np.errstate(all="ignore"):
        if name == "sin":
            return np.sin(x)
        if name == "cos":
            return np.cos(x)
        if name == "exp":
            return np.exp(x)
        if name == "sqrt":
            return np.sqrt(x)
        if name == "abs":
            return np.abs(x).astype(complex)
        if name == "sign":
            return np.sign(np.real(x)).astype(complex)
        if name == "log":
            zero = np.broadcast_to(x == 0, np.broadcast(x, t).shape)
            if np.any(zero):
                raise ExprDomainError("log of zero", _bad(zero, t), pos)
            return np.log(x)
    raise ExprDomainError(f"unknown function {name!r}", None, pos)


# --------------------------------------------------------------------------
# differentiation with light simplification


def _is(e, v):
    return isinstance(e, Const) and e.value == v


def add(x, y):
    if isinstance(x, Const) and isinstance(y, Const):
        return Const(x.value + y.value)
    if _is(x, 0):
        return y
    if _is(y, 0):
        return x
    return BinOp("+", x, y)


def sub(x, y):
    if isinstance(x, Const) and isinstance(y, Const):
        return Const(x.value - y.value)
    if _is(y, 0):
        return x
    if _is(x, 0):
        return neg(y)
    return BinOp("-", x, y)


def mul(x, y):
    if isinstance(x, Const) and isinstance(y, Const):
        return Const(x.value * y.value)
    if _is(x, 0) or _is(y, 0):
        return ZERO
    if _is(x, 1):
        return y
    if _is(y, 1):
        return x
    return BinOp("*", x, y)


def div(x, y):
    if _is(x, 0) and not _is(y, 0):
        return ZERO
    if _is(y, 1):
        return x
    return BinOp("/", x, y)


def neg(x):
    if isinstance(x, Const):
        return Const(-x.value)
    if isinstance(x, Neg):
        return x.arg
    return Neg(x)


def power(x, y):
    if _is(y, 0):
        return ONE
    if _is(y, 1):
        return x
    return BinOp("^", x, y)


def diff(e: Expression) -> Expression:
    """d/dt of `e`. Constants and eps differentiate to zero; d|u| = sign(u) u'."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Sym):
        return ONE if e.name == "t" else ZERO
    if not e.depends_on_t():
        return ZERO
    if isinstance(e, Neg):
        return neg(diff(e.arg))
    if isinstance(e, BinOp):
        u, v = e.left, e.right
        if e.op == "+":
            return add(diff(u), diff(v))
        if e.op == "-":
            return sub(diff(u), diff(v))
        if e.op == "*":
            return add(mul(diff(u), v), mul(u, diff(v)))
        if e.op == "/":
            if not v.depends_on_t():
                return div(diff(u), v)
            return div(sub(mul(diff(u), v), mul(u, diff(v))), power(v, Const(2.0)))
        # exponent is t-free by construction
        return mul(mul(v, power(u, sub(v, ONE))), diff(u))
    if isinstance(e, Call):
        u = e.arg
        du = diff(u)
        f = e.func
        if f == "sin":
            outer = Call("cos", u)
        elif f == "cos":
            outer = neg(Call("sin", u))
        elif f == "exp":
            outer = Call("exp", u)
        elif f == "log":
            return div(du, u)
        elif f == "sqrt":
            return div(du, mul(Const(2.0), Call("sqrt", u)))
        elif f == "abs":
            outer = Call("sign", u)
        elif f == "sign":
            return ZERO
        else:
            raise ValueError(f"cannot differentiate {f!r}")
        return mul(outer, du)
    raise TypeError(f"not an expression: {e!r}")


# --------------------------------------------------------------------------
# matrices of expressions


@dataclass(frozen=True)
class MatrixExpression:
    rows: int
    cols: int
    entries: tuple

    def __post_init__(self):
        entries = tuple(e if isinstance(e, Expression) else parse(e) for e in self.entries)
        if len(entries) != self.rows * self.cols:
            raise ValueError(f"{self.rows}x{self.cols} matrix needs {self.rows * self.cols} entries, got {len(entries)}")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_nested(cls, data) -> "MatrixExpression":
        """Build from nested lists of strings/numbers; a flat list is a column."""
        if isinstance(data, (str, int, float)):
            data = [[data]]
        data = list(data)
        if data and not isinstance(data[0], (list, tuple)):
            data = [[x] for x in data]
        rows = len(data)
        cols = len(data[0]) if rows else 0
        if any(len(row) != cols for row in data):
            raise ValueError("ragged matrix")
        return cls(rows, cols, tuple(x for row in data for x in row))

    @classmethod
    def constant(cls, values) -> "MatrixExpression":
        values = np.atleast_2d(np.asarray(values, dtype=float))
        return cls(values.shape[0], values.shape[1], tuple(Const(float(v)) for v in values.ravel()))

    def derivative(self) -> "MatrixExpression":
        return MatrixExpression(self.rows, self.cols, tuple(diff(e) for e in self.entries))

    def depends_on_t(self) -> bool:
        return any(e.depends_on_t() for e in self.entries)

    def evaluate(self, t, eps: float = 0.0) -> np.ndarray:
        """Values with shape ``t.shape + (rows, cols)``."""
        t = np.asarray(t, dtype=float)
        vals = [np.broadcast_to(evaluate(e, t, eps), t.shape) for e in self.entries]
        return np.stack(vals, axis=-1).reshape(t.shape + (self.rows, self.cols))


def sample_matrix(M: MatrixExpression, grid: Grid, eps: float = 0.0, order: int = 0) -> SampledFunction:
    """Sample `M` and its first `order` t-derivatives on every grid node."""
    if order < 0:
        raise ValueError("order must be >= 0")
    layers = []
    current = M
    for k in range(order + 1):
        layers.append(current.evaluate(grid.nodes, eps))
        if k < order:
            current = current.derivative()
    return SampledFunction(grid, np.stack(layers))
