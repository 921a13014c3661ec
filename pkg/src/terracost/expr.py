"""Infix expressions of (x, y) with forward-mode differentiation.

Cost-rate and terrain fields arrive as text like ``"cos(5*x)^2*cos(y)^2"``.
This module parses such text into an immutable tree and evaluates value plus
exact first partial derivatives by propagating dual numbers with two tangent
components (d/dx, d/dy) through every node.

Evaluation accepts scalars or numpy arrays; array inputs broadcast through
the tree, which is what the quadrature kernels rely on for speed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

__all__ = [
    "DualValue",
    "Expression",
    "ExprDomainError",
    "ExprSyntaxError",
    "parse",
]

Scalar = Union[float, np.ndarray]

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "abs")
VARIABLES = ("x", "y")


class ExprSyntaxError(ValueError):
    """Malformed expression text; ``position`` is the 0-based offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (position {position})")
        self.position = position


class ExprDomainError(ArithmeticError):
    """Evaluation left the real domain; names the offending subexpression."""

    def __init__(self, message: str, subexpression: str):
        super().__init__(f"{message} in '{subexpression}'")
        self.subexpression = subexpression


class DualValue(NamedTuple):
    """Value with both first partials: (v, dv/dx, dv/dy)."""

    v: Scalar
    dx: Scalar
    dy: Scalar


# ---------------------------------------------------------------------------
# tree nodes


@dataclass(frozen=True)
class Literal:
    value: float

    def _eval(self, x, y):
        return self.value

    def _dual(self, x, y):
        return self.value, 0.0, 0.0

    def render(self) -> str:
        return repr(self.value)


@dataclass(frozen=True)
class Variable:
    name: str  # "x" or "y"

    def _eval(self, x, y):
        return x if self.name == "x" else y

    def _dual(self, x, y):
        if self.name == "x":
            return x, 1.0, 0.0
        return y, 0.0, 1.0

    def render(self) -> str:
        return self.name


@dataclass(frozen=True)
class Negate:
    arg: Node

    def _eval(self, x, y):
        return -self.arg._eval(x, y)

    def _dual(self, x, y):
        v, dx, dy = self.arg._dual(x, y)
        return -v, -dx, -dy

    def render(self) -> str:
        return f"(-{self.arg.render()})"


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * / ^
    lhs: Node
    rhs: Node

    def _eval(self, x, y):
        a = self.lhs._eval(x, y)
        b = self.rhs._eval(x, y)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            if np.any(b == 0.0):
                raise ExprDomainError("division by zero", self.render())
            return a / b
        self._check_power(a, b)
        return np.power(a, b)

    def _dual(self, x, y):
        a, adx, ady = self.lhs._dual(x, y)
        b, bdx, bdy = self.rhs._dual(x, y)
        if self.op == "+":
            return a + b, adx + bdx, ady + bdy
        if self.op == "-":
            return a - b, adx - bdx, ady - bdy
        if self.op == "*":
            return a * b, adx * b + a * bdx, ady * b + a * bdy
        if self.op == "/":
            if np.any(b == 0.0):
                raise ExprDomainError("division by zero", self.render())
            inv = 1.0 / b
            v = a * inv
            return v, (adx - v * bdx) * inv, (ady - v * bdy) * inv
        self._check_power(a, b)
        v = np.power(a, b)
        if isinstance(self.rhs, Literal):
            # Constant exponent p: d(a^p) = p * a^(p-1) * da.  Valid for
            # negative bases with integer p, where the log form is not.
            p = self.rhs.value
            g = p * np.power(a, p - 1.0)
            return v, g * adx, g * ady
        loga = np.log(a)
        return (
            v,
            v * (bdx * loga + b * adx / a),
            v * (bdy * loga + b * ady / a),
        )

    def _check_power(self, a, b):
        if isinstance(self.rhs, Literal) and float(self.rhs.value).is_integer():
            if np.any((a == 0.0) & (self.rhs.value < 0)):
                raise ExprDomainError("zero base with negative exponent", self.render())
            return
        if np.any(a < 0.0):
            raise ExprDomainError(
                "negative base with non-integer exponent", self.render()
            )
        if np.any((a == 0.0) & (b <= 0.0)):
            raise ExprDomainError("zero base with non-positive exponent", self.render())

    def render(self) -> str:
        return f"({self.lhs.render()}{self.op}{self.rhs.render()})"


@dataclass(frozen=True)
class Call:
    func: str
    arg: Node

    def _eval(self, x, y):
        u = self.arg._eval(x, y)
        if self.func == "sin":
            return np.sin(u)
        if self.func == "cos":
            return np.cos(u)
        if self.func == "tan":
            return np.tan(u)
        if self.func == "exp":
            return np.exp(u)
        if self.func == "abs":
            return np.abs(u)
        if self.func == "log":
            if np.any(u <= 0.0):
                raise ExprDomainError("log of a non-positive value", self.render())
            return np.log(u)
        # sqrt
        if np.any(u < 0.0):
            raise ExprDomainError("sqrt of a negative value", self.render())
        return np.sqrt(u)

    def _dual(self, x, y):
        u, udx, udy = self.arg._dual(x, y)
        if self.func == "sin":
            g = np.cos(u)
            return np.sin(u), g * udx, g * udy
        if self.func == "cos":
            g = -np.sin(u)
            return np.cos(u), g * udx, g * udy
        if self.func == "tan":
            c = np.cos(u)
            g = 1.0 / (c * c)
            return np.tan(u), g * udx, g * udy
        if self.func == "exp":
            v = np.exp(u)
            return v, v * udx, v * udy
        if self.func == "abs":
            # Subgradient convention: derivative 0 at the kink.
            g = np.sign(u)
            return np.abs(u), g * udx, g * udy
        if self.func == "log":
            if np.any(u <= 0.0):
                raise ExprDomainError("log of a non-positive value", self.render())
            g = 1.0 / u
            return np.log(u), g * udx, g * udy
        if np.any(u < 0.0):
            raise ExprDomainError("sqrt of a negative value", self.render())
        v = np.sqrt(u)
        g = 0.5 / v
        return v, g * udx, g * udy

    def render(self) -> str:
        return f"{self.func}({self.arg.render()})"


Node = Union[Literal, Variable, Negate, Binary, Call]


# ---------------------------------------------------------------------------
# public expression handle


@dataclass(frozen=True)
class Expression:
    """An immutable parsed expression; evaluation is reentrant."""

    root: Node
    source: str

    def eval(self, x: Scalar, y: Scalar) -> Scalar:
        """Evaluate the expression at (x, y); scalars in, scalar out."""
        scalar_in = np.ndim(x) == 0 and np.ndim(y) == 0
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            v = self.root._eval(x, y)
        return float(v) if scalar_in else v

    def eval_dual(self, x: Scalar, y: Scalar) -> DualValue:
        """Evaluate value and exact first partials at (x, y)."""
        scalar_in = np.ndim(x) == 0 and np.ndim(y) == 0
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            v, dx, dy = self.root._dual(x, y)
        if scalar_in:
            return DualValue(float(v), float(dx), float(dy))
        return DualValue(v, dx, dy)

    def render(self) -> str:
        """Unambiguous (fully parenthesized) serialization; re-parseable."""
        return self.root.render()


# ---------------------------------------------------------------------------
# tokenizer / parser

_TOKEN_RE = re.compile(
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<sym>[-+*/^(),])"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    # Grammar (binding from loose to tight): additive, multiplicative,
    # unary minus, power (right-assoc, exponent re-admits unary), atom.

    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def parse(self) -> Node:
        node = self.additive()
        kind, value, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {value!r}", pos)
        return node

    def additive(self) -> Node:
        node = self.multiplicative()
        while True:
            kind, value, _ = self.peek()
            if kind == "sym" and value in "+-":
                self.advance()
                node = Binary(value, node, self.multiplicative())
            else:
                return node

    def multiplicative(self) -> Node:
        node = self.unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "sym" and value in "*/":
                self.advance()
                node = Binary(value, node, self.unary())
            else:
                return node

    def unary(self) -> Node:
        kind, value, _ = self.peek()
        if kind == "sym" and value == "-":
            self.advance()
            node = self.unary()
            if isinstance(node, Literal):
                # Fold so x^-2 keeps an integer-literal exponent (negative
                # bases stay legal, as for x^2).
                return Literal(-node.value)
            return Negate(node)
        return self.power()

    def power(self) -> Node:
        node = self.atom()
        kind, value, _ = self.peek()
        if kind == "sym" and value == "^":
            self.advance()
            return Binary("^", node, self.unary())
        return node

    def atom(self) -> Node:
        kind, value, pos = self.advance()
        if kind == "num":
            return Literal(float(value))
        if kind == "name":
            if value in FUNCTIONS:
                return self.call(value, pos)
            if value in VARIABLES:
                return Variable(value)
            raise ExprSyntaxError(f"unknown identifier {value!r}", pos)
        if kind == "sym" and value == "(":
            node = self.additive()
            self.expect(")")
            return node
        if kind == "end":
            raise ExprSyntaxError("unexpected end of input", pos)
        raise ExprSyntaxError(f"unexpected token {value!r}", pos)

    def call(self, func: str, pos: int) -> Node:
        kind, value, apos = self.peek()
        if not (kind == "sym" and value == "("):
            raise ExprSyntaxError(f"expected '(' after function {func!r}", apos)
        self.advance()
        arg = self.additive()
        kind, value, cpos = self.peek()
        if kind == "sym" and value == ",":
            raise ExprSyntaxError(
                f"function {func!r} takes exactly one argument", cpos
            )
        self.expect(")")
        return Call(func, arg)

    def expect(self, sym: str):
        kind, value, pos = self.peek()
        if kind == "sym" and value == sym:
            self.advance()
            return
        found = "end of input" if kind == "end" else repr(value)
        raise ExprSyntaxError(f"expected {sym!r}, found {found}", pos)


def parse(text: str) -> Expression:
    """Parse expression text into an :class:`Expression`.

    Raises :class:`ExprSyntaxError` on malformed input, unknown identifiers
    (only ``x`` and ``y`` are variables) and wrong function arity.
    """
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return Expression(_Parser(text).parse(), text)
