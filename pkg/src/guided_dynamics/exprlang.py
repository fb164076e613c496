"""Scalar expression language: parsing, evaluation, symbolic differentiation.

Grammar (EBNF), with ``t`` the default variable name:

    expr   := term (("+"|"-") term)* ;
    term   := factor (("*"|"/") factor)* ;
    factor := ("-" factor) | power ;
    power  := atom ("^" factor)? ;
    atom   := NUMBER | "pi" | "e" | IDENT "(" expr ")" | IDENT | "(" expr ")" ;

Precedence is ^ above unary minus above * / above + -, with ^
right-associative. Trees are immutable; evaluation is pure and accepts
floats or numpy arrays. ``sign`` is accepted as a function so that printed
derivatives of ``abs`` re-parse; sign(0) evaluates to 0 by convention.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ExprSyntaxError

__all__ = [
    "Expression", "Num", "Var", "Const", "Neg", "Add", "Sub", "Mul", "Div",
    "Pow", "Call", "FUNCTIONS", "parse", "to_source", "differentiate",
    "as_callable",
]

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "tanh", "sign")

_CONSTANTS = {"pi": math.pi, "e": math.e}


class Expression:
    """Base class for AST nodes. Subclasses are frozen dataclasses."""

    precedence = 5  # atoms; overridden by operator nodes

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        raise NotImplementedError

    def __str__(self):
        return to_source(self)

    # Symbolic construction sugar, used e.g. to build n*alpha1 - m*alpha2.
    def __add__(self, other):
        return Add(self, _coerce(other))

    def __radd__(self, other):
        return Add(_coerce(other), self)

    def __sub__(self, other):
        return Sub(self, _coerce(other))

    def __rsub__(self, other):
        return Sub(_coerce(other), self)

    def __mul__(self, other):
        return Mul(self, _coerce(other))

    def __rmul__(self, other):
        return Mul(_coerce(other), self)

    def __truediv__(self, other):
        return Div(self, _coerce(other))

    def __rtruediv__(self, other):
        return Div(_coerce(other), self)

    def __pow__(self, other):
        return Pow(self, _coerce(other))

    def __neg__(self):
        return Neg(self)


def _coerce(value):
    if isinstance(value, Expression):
        return value
    return Num(float(value))


@dataclass(frozen=True, repr=False)
class Num(Expression):
    value: float

    def eval(self, x):
        if isinstance(x, np.ndarray):
            return np.full_like(x, self.value, dtype=float)
        return self.value

    def __repr__(self):
        return f"Num({self.value!r})"

    @property
    def precedence(self):
        return 5 if self.value >= 0 else 3


@dataclass(frozen=True, repr=False)
class Var(Expression):
    name: str = "t"

    def eval(self, x):
        if isinstance(x, np.ndarray):
            return x.astype(float, copy=True)
        return float(x)

    def __repr__(self):
        return f"Var({self.name!r})"


@dataclass(frozen=True, repr=False)
class Const(Expression):
    name: str

    def eval(self, x):
        v = _CONSTANTS[self.name]
        if isinstance(x, np.ndarray):
            return np.full_like(x, v, dtype=float)
        return v

    def __repr__(self):
        return f"Const({self.name!r})"


@dataclass(frozen=True, repr=False)
class Neg(Expression):
    arg: Expression
    precedence = 3

    def eval(self, x):
        return -self.arg.eval(x)

    def __repr__(self):
        return f"Neg({self.arg!r})"


class _BinOp(Expression):
    op = "?"

    def __repr__(self):
        return f"{type(self).__name__}({self.lhs!r}, {self.rhs!r})"


@dataclass(frozen=True, repr=False)
class Add(_BinOp):
    lhs: Expression
    rhs: Expression
    precedence = 1
    op = "+"

    def eval(self, x):
        return self.lhs.eval(x) + self.rhs.eval(x)


@dataclass(frozen=True, repr=False)
class Sub(_BinOp):
    lhs: Expression
    rhs: Expression
    precedence = 1
    op = "-"

    def eval(self, x):
        return self.lhs.eval(x) - self.rhs.eval(x)


@dataclass(frozen=True, repr=False)
class Mul(_BinOp):
    lhs: Expression
    rhs: Expression
    precedence = 2
    op = "*"

    def eval(self, x):
        return self.lhs.eval(x) * self.rhs.eval(x)


@dataclass(frozen=True, repr=False)
class Div(_BinOp):
    lhs: Expression
    rhs: Expression
    precedence = 2
    op = "/"

    def eval(self, x):
        num = self.lhs.eval(x)
        den = self.rhs.eval(x)
        if isinstance(den, np.ndarray):
            if np.any(den == 0.0):
                raise DomainError("division by zero", subexpression=self, x=x)
        elif den == 0.0:
            raise DomainError("division by zero", subexpression=self, x=x)
        return num / den


@dataclass(frozen=True, repr=False)
class Pow(_BinOp):
    lhs: Expression
    rhs: Expression
    precedence = 4
    op = "^"

    def eval(self, x):
        base = self.lhs.eval(x)
        expo = self.rhs.eval(x)
        return _pow_eval(base, expo, self, x)


def _pow_eval(base, expo, node, x):
    scalar = not (isinstance(base, np.ndarray) or isinstance(expo, np.ndarray))
    if scalar:
        if base == 0.0 and expo < 0.0:
            raise DomainError("zero raised to a negative power",
                              subexpression=node, x=x)
        if base < 0.0 and expo != math.floor(expo):
            raise DomainError("negative base with non-integer exponent",
                              subexpression=node, x=x)
        return base ** expo
    base = np.asarray(base, dtype=float)
    expo = np.asarray(expo, dtype=float)
    if np.any((base == 0.0) & (expo < 0.0)):
        raise DomainError("zero raised to a negative power",
                          subexpression=node, x=x)
    neg = base < 0.0
    if np.any(neg & (expo != np.floor(expo))):
        raise DomainError("negative base with non-integer exponent",
                          subexpression=node, x=x)
    if np.any(neg):
        # np.power rejects negative bases with float exponents; route the
        # integral-exponent case through |base| and an explicit sign.
        mag = np.power(np.abs(base), expo)
        sgn = np.where(neg & (np.mod(expo, 2.0) == 1.0), -1.0, 1.0)
        return sgn * mag
    return np.power(base, expo)


_NP_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp,
    "log": np.log, "sqrt": np.sqrt, "abs": np.abs, "tanh": np.tanh,
    "sign": np.sign,
}


@dataclass(frozen=True, repr=False)
class Call(Expression):
    func: str
    arg: Expression

    def eval(self, x):
        v = self.arg.eval(x)
        if self.func == "log":
            bad = np.any(v <= 0.0) if isinstance(v, np.ndarray) else v <= 0.0
            if bad:
                raise DomainError("log of a non-positive number",
                                  subexpression=self, x=x)
        elif self.func == "sqrt":
            bad = np.any(v < 0.0) if isinstance(v, np.ndarray) else v < 0.0
            if bad:
                raise DomainError("sqrt of a negative number",
                                  subexpression=self, x=x)
        out = _NP_FUNCS[self.func](v)
        if not isinstance(v, np.ndarray):
            return float(out)
        return out

    def __repr__(self):
        return f"Call({self.func!r}, {self.arg!r})"


# --------------------------------------------------------------------------
# Tokenizer / parser
# --------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


def _tokenize(source):
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        if m is None or m.end() == m.start():
            # skip over whitespace-only tail
            rest = source[pos:]
            if rest.strip() == "":
                break
            offset = pos + len(rest) - len(rest.lstrip())
            raise ExprSyntaxError(
                f"unexpected character {source[offset]!r}", offset,
                expected=("NUMBER", "IDENT", "operator"))
        kind = m.lastgroup
        text = m.group(kind)
        tokens.append((kind, text, m.start(kind)))
        pos = m.end()
    tokens.append(("eof", "", n))
    return tokens


class _Parser:
    def __init__(self, tokens, var):
        self.tokens = tokens
        self.var = var
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected):
        kind, text, offset = self.peek()
        got = text if text else "end of input"
        raise ExprSyntaxError(f"unexpected {got!r}", offset, expected=expected)

    def expect_op(self, symbol):
        kind, text, offset = self.peek()
        if kind == "op" and text == symbol:
            return self.advance()
        self.fail((symbol,))

    def parse(self):
        node = self.expr()
        kind, text, offset = self.peek()
        if kind != "eof":
            self.fail(("operator", "end of input"))
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                rhs = self.term()
                node = Add(node, rhs) if text == "+" else Sub(node, rhs)
            else:
                return node

    def term(self):
        node = self.factor()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                rhs = self.factor()
                node = Mul(node, rhs) if text == "*" else Div(node, rhs)
            else:
                return node

    def factor(self):
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            inner = self.factor()
            # fold a negated literal so printed negative constants
            # round-trip to the same tree
            if isinstance(inner, Num):
                return Num(-inner.value)
            return Neg(inner)
        return self.power()

    def power(self):
        base = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            return Pow(base, self.factor())
        return base

    def atom(self):
        kind, text, offset = self.peek()
        if kind == "number":
            self.advance()
            return Num(float(text))
        if kind == "ident":
            self.advance()
            nkind, ntext, _ = self.peek()
            if nkind == "op" and ntext == "(":
                if text not in FUNCTIONS:
                    raise ExprSyntaxError(
                        f"unknown function {text!r}", offset,
                        expected=FUNCTIONS)
                self.advance()
                arg = self.expr()
                self.expect_op(")")
                return Call(text, arg)
            if text == self.var:
                return Var(text)
            if text in _CONSTANTS:
                return Const(text)
            raise ExprSyntaxError(
                f"unknown identifier {text!r}", offset,
                expected=(self.var, "pi", "e") + FUNCTIONS)
        if kind == "op" and text == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        self.fail(("NUMBER", "IDENT", "(", "-"))


def parse(source: str, var: str = "t") -> Expression:
    """Parse ``source`` into an expression tree over the variable ``var``."""
    return _Parser(_tokenize(source), var).parse()


# --------------------------------------------------------------------------
# Printing
# --------------------------------------------------------------------------

def to_source(node: Expression) -> str:
    """Render a tree as parseable source. Parenthesization is conservative
    enough that parse(to_source(e)) rebuilds exactly the same tree."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    if isinstance(node, Neg):
        inner = to_source(node.arg)
        if node.arg.precedence < Neg.precedence:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, _BinOp):
        lp, rp = node.lhs.precedence, node.rhs.precedence
        if isinstance(node, Pow):
            # right-associative
            left_needs = lp <= node.precedence
            right_needs = rp < node.precedence
        else:
            left_needs = lp < node.precedence
            right_needs = rp <= node.precedence
        left = to_source(node.lhs)
        right = to_source(node.rhs)
        if left_needs:
            left = f"({left})"
        if right_needs:
            right = f"({right})"
        return f"{left}{node.op}{right}"
    raise TypeError(f"not an expression node: {node!r}")


# --------------------------------------------------------------------------
# Differentiation
# --------------------------------------------------------------------------

def _is_num(node, value=None):
    return isinstance(node, Num) and (value is None or node.value == value)


def _add(a, b):
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    if _is_num(a) and _is_num(b):
        return Num(a.value + b.value)
    return Add(a, b)


def _sub(a, b):
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return _negate(b)
    if _is_num(a) and _is_num(b):
        return Num(a.value - b.value)
    return Sub(a, b)


def _mul(a, b):
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return Num(0.0)
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    if _is_num(a) and _is_num(b):
        return Num(a.value * b.value)
    return Mul(a, b)


def _divide(a, b):
    if _is_num(a, 0.0):
        return Num(0.0)
    if _is_num(b, 1.0):
        return a
    if _is_num(a) and _is_num(b) and b.value != 0.0:
        return Num(a.value / b.value)
    return Div(a, b)


def _negate(a):
    if _is_num(a):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _pow(a, b):
    if _is_num(b, 1.0):
        return a
    if _is_num(b, 0.0):
        return Num(1.0)
    if _is_num(a) and _is_num(b) and (a.value > 0.0 or b.value == math.floor(b.value)):
        return Num(a.value ** b.value)
    return Pow(a, b)


def contains_var(node: Expression) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, (Num, Const)):
        return False
    if isinstance(node, Neg):
        return contains_var(node.arg)
    if isinstance(node, Call):
        return contains_var(node.arg)
    return contains_var(node.lhs) or contains_var(node.rhs)


def differentiate(node: Expression) -> Expression:
    """Exact symbolic derivative with light constant folding.

    d(abs)/dx is rendered as sign(x); sign itself differentiates to 0
    (both conventions hold off the kink, which is all the numeric layers
    rely on).
    """
    if isinstance(node, (Num, Const)):
        return Num(0.0)
    if isinstance(node, Var):
        return Num(1.0)
    if isinstance(node, Neg):
        return _negate(differentiate(node.arg))
    if isinstance(node, Add):
        return _add(differentiate(node.lhs), differentiate(node.rhs))
    if isinstance(node, Sub):
        return _sub(differentiate(node.lhs), differentiate(node.rhs))
    if isinstance(node, Mul):
        da, db = differentiate(node.lhs), differentiate(node.rhs)
        return _add(_mul(da, node.rhs), _mul(node.lhs, db))
    if isinstance(node, Div):
        da, db = differentiate(node.lhs), differentiate(node.rhs)
        num = _sub(_mul(da, node.rhs), _mul(node.lhs, db))
        return _divide(num, _pow(node.rhs, Num(2.0)))
    if isinstance(node, Pow):
        f, g = node.lhs, node.rhs
        df = differentiate(f)
        if not contains_var(g):
            # g * f^(g-1) * f'
            expo = _sub(g, Num(1.0)) if _is_num(g) else Sub(g, Num(1.0))
            return _mul(_mul(g, _pow(f, expo)), df)
        dg = differentiate(g)
        if not contains_var(f):
            # f^g * log(f) * g'
            return _mul(_mul(node, Call("log", f)), dg)
        # f^g * (g' log f + g f'/f)
        return _mul(node, _add(_mul(dg, Call("log", f)),
                               _divide(_mul(g, df), f)))
    if isinstance(node, Call):
        da = differentiate(node.arg)
        u = node.arg
        if node.func == "sin":
            outer = Call("cos", u)
        elif node.func == "cos":
            outer = _negate(Call("sin", u))
        elif node.func == "tan":
            outer = _divide(Num(1.0), _pow(Call("cos", u), Num(2.0)))
        elif node.func == "exp":
            outer = node
        elif node.func == "log":
            return _divide(da, u)
        elif node.func == "sqrt":
            return _divide(da, _mul(Num(2.0), node))
        elif node.func == "abs":
            outer = Call("sign", u)
        elif node.func == "tanh":
            outer = _sub(Num(1.0), _pow(node, Num(2.0)))
        elif node.func == "sign":
            return Num(0.0)
        else:  # pragma: no cover
            raise ValueError(f"no derivative rule for {node.func}")
        return _mul(outer, da)
    raise TypeError(f"not an expression node: {node!r}")


def as_callable(expr):
    """Expression -> vectorized callable; callables pass through."""
    if isinstance(expr, Expression):
        return expr.eval
    if callable(expr):
        return expr
    raise TypeError(f"expected Expression or callable, got {type(expr)!r}")
