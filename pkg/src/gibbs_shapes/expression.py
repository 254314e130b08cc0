"""A small expression language for user-supplied energy functions u(x).

Grammar (``^`` is right-associative, unary minus binds tighter than ``^``)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := unary ('^' factor)?
    unary  := '-'? base
    base   := number | 'x' | ident '(' expr ')' | '(' expr ')'

Trees are frozen dataclasses, so structural equality is ``==``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import specfun
from .errors import ExpressionSyntaxError, UnknownIdentifier, UnsupportedDerivative


class Node:
    __slots__ = ()

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Num(Node):
    value: float


@dataclass(frozen=True)
class Var(Node):
    pass


@dataclass(frozen=True)
class Neg(Node):
    arg: Node


@dataclass(frozen=True)
class Add(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Sub(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Mul(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Div(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Pow(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Fn(Node):
    name: str
    arg: Node


X = Var()
ZERO = Num(0.0)
ONE = Num(1.0)

FUNCTIONS: dict[str, Callable] = {
    "ln": np.log,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "lgamma": specfun.lgamma,
    "digamma": specfun.digamma,
    "trigamma": specfun.trigamma,
    "sin": np.sin,
    "cos": np.cos,
}

# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExpressionSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text):
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
        if val != value or kind != "op":
            got = "end of input" if kind == "end" else repr(val)
            raise ExpressionSyntaxError(f"expected {value!r}, got {got}", pos)

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.factor()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def factor(self):
        base = self.unary()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return Pow(base, self.factor())
        return base

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return Neg(self.base())
        return self.base()

    def base(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "ident":
            if val == "x":
                return X
            if val not in FUNCTIONS:
                raise UnknownIdentifier(val, pos)
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return Fn(val, arg)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        got = "end of input" if kind == "end" else repr(val)
        raise ExpressionSyntaxError(f"unexpected {got}", pos)


def parse_energy_expression(text: str) -> Node:
    """Parse ``text`` into an expression tree."""
    if not text or not text.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    try:
        text.encode("ascii")
    except UnicodeEncodeError as exc:
        raise ExpressionSyntaxError("non-ASCII character", exc.start) from None
    p = _Parser(text)
    node = p.expr()
    kind, val, pos = p.peek()
    if kind != "end":
        raise ExpressionSyntaxError(f"unexpected {val!r}", pos)
    return node


# ---------------------------------------------------------------- printing

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Pow: 3}
_SYMBOL = {Add: "+", Sub: "-", Mul: "*", Div: "/", Pow: "^"}


def _num_text(v):
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _atomic(node):
    if isinstance(node, Num):
        return node.value >= 0
    return isinstance(node, (Var, Fn))


def to_text(node: Node) -> str:
    """Render with the minimum parentheses that re-parse to the same tree."""
    if isinstance(node, Num):
        s = _num_text(node.value)
        return f"({s})" if node.value < 0 else s
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Fn):
        return f"{node.name}({to_text(node.arg)})"
    if isinstance(node, Neg):
        inner = to_text(node.arg)
        return f"-{inner}" if _atomic(node.arg) else f"-({inner})"
    cls = type(node)
    prec = _PREC[cls]
    left, right = to_text(node.left), to_text(node.right)
    if cls is Pow:
        # left operand must be a unary/base; right operand is a factor
        if not (_atomic(node.left) or isinstance(node.left, Neg) and _atomic(node.left.arg)):
            left = f"({left})"
        if not (_atomic(node.right) or isinstance(node.right, (Num, Pow, Neg))):
            right = f"({right})"
        return f"{left}^{right}"
    if _PREC.get(type(node.left), 4) < prec:
        left = f"({left})"
    # left-associative: an equal-precedence right operand needs parentheses
    if _PREC.get(type(node.right), 4) <= prec:
        right = f"({right})"
    return f"{left} {_SYMBOL[cls]} {right}"


# ---------------------------------------------------------- construction

def _is_num(node, value=None):
    return isinstance(node, Num) and (value is None or node.value == value)


def add(a, b):
    if _is_num(a) and _is_num(b):
        return Num(a.value + b.value)
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    return Add(a, b)


def sub(a, b):
    if _is_num(a) and _is_num(b):
        return Num(a.value - b.value)
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return neg(b)
    if _is_num(b) and isinstance(a, Add) and _is_num(a.right):
        return add(a.left, Num(a.right.value - b.value))
    return Sub(a, b)


def neg(a):
    if _is_num(a):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def mul(a, b):
    if _is_num(a) and _is_num(b):
        return Num(a.value * b.value)
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return ZERO
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    if _is_num(b):
        a, b = b, a
    if _is_num(a) and isinstance(b, Mul) and _is_num(b.left):
        return mul(Num(a.value * b.left.value), b.right)
    # y * (c / y) -> c
    if isinstance(b, Div) and b.right == a:
        return b.left
    if isinstance(a, Div) and a.right == b:
        return a.left
    return Mul(a, b)


def div(a, b):
    if _is_num(a) and _is_num(b) and b.value != 0.0:
        return Num(a.value / b.value)
    if _is_num(a, 0.0):
        return ZERO
    if _is_num(b, 1.0):
        return a
    if _is_num(b) and b.value != 0.0:
        if isinstance(a, Mul) and _is_num(a.left):
            return mul(Num(a.left.value / b.value), a.right)
    return Div(a, b)


def power(a, b):
    if _is_num(a) and _is_num(b):
        try:
            return Num(a.value ** b.value)
        except (OverflowError, ZeroDivisionError):
            return Pow(a, b)
    if _is_num(b, 1.0):
        return a
    if _is_num(b, 0.0):
        return ONE
    return Pow(a, b)


def fn(name, a):
    return Fn(name, a)


def depends_on_x(node: Node) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, Num):
        return False
    if isinstance(node, (Neg, Fn)):
        return depends_on_x(node.arg)
    return depends_on_x(node.left) or depends_on_x(node.right)


# --------------------------------------------------------- differentiation

def differentiate(node: Node) -> Node:
    """Exact symbolic derivative with respect to x."""
    if isinstance(node, Num):
        return ZERO
    if isinstance(node, Var):
        return ONE
    if isinstance(node, Neg):
        return neg(differentiate(node.arg))
    if isinstance(node, Add):
        return add(differentiate(node.left), differentiate(node.right))
    if isinstance(node, Sub):
        return sub(differentiate(node.left), differentiate(node.right))
    if isinstance(node, Mul):
        a, b = node.left, node.right
        return add(mul(differentiate(a), b), mul(a, differentiate(b)))
    if isinstance(node, Div):
        a, b = node.left, node.right
        if not depends_on_x(b):
            return div(differentiate(a), b)
        num = sub(mul(differentiate(a), b), mul(a, differentiate(b)))
        return div(num, power(b, Num(2.0)))
    if isinstance(node, Pow):
        a, b = node.left, node.right
        if not depends_on_x(b):
            return mul(mul(b, power(a, sub(b, ONE))), differentiate(a))
        if not depends_on_x(a):
            return mul(mul(node, fn("ln", a)), differentiate(b))
        inner = add(mul(differentiate(b), fn("ln", a)), mul(b, div(differentiate(a), a)))
        return mul(node, inner)
    if isinstance(node, Fn):
        a = node.arg
        da = differentiate(a)
        name = node.name
        if name == "ln":
            return div(da, a)
        if name == "exp":
            outer = node
        elif name == "sqrt":
            return div(da, mul(Num(2.0), node))
        elif name == "lgamma":
            outer = fn("digamma", a)
        elif name == "digamma":
            outer = fn("trigamma", a)
        elif name == "sin":
            outer = fn("cos", a)
        elif name == "cos":
            outer = neg(fn("sin", a))
        else:
            raise UnsupportedDerivative(name)
        return mul(outer, da)
    raise TypeError(f"not an expression node: {node!r}")


# -------------------------------------------------------------- evaluation

def compile_expression(node: Node) -> Callable:
    """Turn a tree into a vectorised function of x (scalar or ndarray)."""
    if isinstance(node, Num):
        v = node.value
        return lambda x: np.full_like(np.asarray(x, dtype=float), v) if np.ndim(x) else v
    if isinstance(node, Var):
        return lambda x: x
    if isinstance(node, Neg):
        f = compile_expression(node.arg)
        return lambda x: -f(x)
    if isinstance(node, Fn):
        f = compile_expression(node.arg)
        g = FUNCTIONS[node.name]
        return lambda x: g(f(x))
    f, g = compile_expression(node.left), compile_expression(node.right)
    if isinstance(node, Add):
        return lambda x: f(x) + g(x)
    if isinstance(node, Sub):
        return lambda x: f(x) - g(x)
    if isinstance(node, Mul):
        return lambda x: f(x) * g(x)
    if isinstance(node, Div):
        return lambda x: f(x) / g(x)
    if isinstance(node, Pow):
        return lambda x: np.power(f(x), g(x))
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(node: Node, x):
    with np.errstate(all="ignore"):
        out = compile_expression(node)(np.asarray(x, dtype=float) if np.ndim(x) else float(x))
    if np.ndim(out) == 0:
        return float(out)
    return out


def constant_value(node: Node) -> float:
    if depends_on_x(node):
        raise ValueError("expression depends on x")
    return evaluate(node, 1.0)


__all__ = [
    "Node", "Num", "Var", "Neg", "Add", "Sub", "Mul", "Div", "Pow", "Fn", "X",
    "parse_energy_expression", "differentiate", "to_text", "compile_expression",
    "evaluate", "FUNCTIONS",
]
