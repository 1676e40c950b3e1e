"""A small expression language for characteristics and vector-field coefficients.

Identifiers ``x``, ``t`` and ``u`` denote lattice values at the reference
point; ``u[+1,0]`` reads the value one step ahead in the spatial index and
``u[0,-1]`` one step back in time.  Any other identifier is a named
parameter supplied at evaluation time.  See ``docs/grammar.md`` for the EBNF.

>>> e = parse("(u[1,0] - u)/(x[1,0] - x)")
>>> sorted(e.stencil)
[(0, 0), (1, 0)]
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping

import numpy as np

from .errors import LatsymError

LATTICE_VARS = ("x", "t", "u")
FUNCTIONS = ("exp", "ln", "sqrt")


class ParseError(LatsymError, ValueError):
    """Syntax error with the offending ``(start, end)`` span of the source."""

    def __init__(self, message: str, span: tuple[int, int], source: str):
        self.message = message
        self.span = span
        self.source = source
        super().__init__(message)

    def __str__(self):
        start, end = self.span
        caret = " " * start + "^" * max(1, end - start)
        return f"{self.message} at {start}:{end}\n  {self.source}\n  {caret}"


class EvaluationError(LatsymError, ValueError):
    pass


# --------------------------------------------------------------------------
# tokens

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\*\*|[-+*/^()\[\],;])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    start: int
    end: int


def tokenize(source: str) -> list[Token]:
    tokens, pos = [], 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", (pos, pos + 1), source)
        if m.lastgroup != "ws":
            tokens.append(Token(m.lastgroup, m.group(), m.start(), m.end()))
        pos = m.end()
    tokens.append(Token("eof", "", len(source), len(source)))
    return tokens


# --------------------------------------------------------------------------
# syntax tree


@dataclass(frozen=True)
class Node:
    span: tuple[int, int]


@dataclass(frozen=True)
class Num(Node):
    value: Fraction


@dataclass(frozen=True)
class Var(Node):
    name: str
    di: int = 0
    dj: int = 0


@dataclass(frozen=True)
class Param(Node):
    name: str


@dataclass(frozen=True)
class Unary(Node):
    op: str
    operand: Node


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node


@dataclass(frozen=True)
class Call(Node):
    func: str
    arg: Node


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = tokenize(source)
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        raise ParseError(msg, (tok.start, max(tok.end, tok.start + 1)), self.source)

    def advance(self) -> Token:
        tok = self.tok
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        if self.tok.text != text:
            found = "end of input" if self.tok.kind == "eof" else repr(self.tok.text)
            self.error(f"expected {text!r}, found {found}")
        return self.advance()

    def field(self) -> list[Node]:
        exprs = [self.expr()]
        while self.tok.text == ";":
            self.advance()
            exprs.append(self.expr())
        if self.tok.kind != "eof":
            self.error(f"unexpected {self.tok.text!r}")
        return exprs

    def expr(self) -> Node:
        node = self.term()
        while self.tok.text in ("+", "-"):
            op = self.advance().text
            rhs = self.term()
            node = BinOp((node.span[0], rhs.span[1]), op, node, rhs)
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok.text in ("*", "/"):
            op = self.advance().text
            rhs = self.unary()
            node = BinOp((node.span[0], rhs.span[1]), op, node, rhs)
        return node

    def unary(self) -> Node:
        if self.tok.text in ("+", "-"):
            tok = self.advance()
            operand = self.unary()
            return Unary((tok.start, operand.span[1]), tok.text, operand)
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.tok.text in ("^", "**"):
            self.advance()
            exponent = self.unary()
            return BinOp((base.span[0], exponent.span[1]), "^", base, exponent)
        return base

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            return Num((tok.start, tok.end), Fraction(tok.text))
        if tok.text == "(":
            self.advance()
            node = self.expr()
            close = self.expect(")")
            return _respan(node, (tok.start, close.end))
        if tok.kind == "ident":
            self.advance()
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                close = self.expect(")")
                return Call((tok.start, close.end), tok.text, arg)
            if self.tok.text == "[":
                if tok.text not in LATTICE_VARS:
                    self.error(f"only {', '.join(LATTICE_VARS)} can be shifted", tok)
                self.advance()
                di = self.integer()
                self.expect(",")
                dj = self.integer()
                close = self.expect("]")
                return Var((tok.start, close.end), tok.text, di, dj)
            if tok.text in LATTICE_VARS:
                return Var((tok.start, tok.end), tok.text)
            return Param((tok.start, tok.end), tok.text)
        if tok.kind == "eof":
            self.error("unexpected end of input")
        self.error(f"unexpected {tok.text!r}")

    def integer(self) -> int:
        sign = 1
        if self.tok.text in ("+", "-"):
            sign = -1 if self.advance().text == "-" else 1
        tok = self.tok
        if tok.kind != "number" or not tok.text.isdigit():
            self.error("shift offsets must be integers")
        self.advance()
        return sign * int(tok.text)


def _respan(node: Node, span):
    return type(node)(span, *[getattr(node, f) for f in node.__dataclass_fields__ if f != "span"])


# --------------------------------------------------------------------------
# evaluation


def _walk(node: Node):
    yield node
    for name in ("operand", "left", "right", "arg"):
        child = getattr(node, name, None)
        if child is not None:
            yield from _walk(child)


def _is_object(v) -> bool:
    return isinstance(v, Fraction) or (isinstance(v, np.ndarray) and v.dtype == object)


_FLOAT_FUNCS = {"exp": np.exp, "ln": np.log, "sqrt": np.sqrt}
_OBJ_FUNCS = {
    "exp": np.frompyfunc(lambda v: math.exp(v), 1, 1),
    "ln": np.frompyfunc(lambda v: math.log(v), 1, 1),
    "sqrt": np.frompyfunc(lambda v: math.sqrt(v), 1, 1),
}


def _power(base, exponent):
    if isinstance(exponent, Fraction) and exponent.denominator == 1:
        return base ** int(exponent)
    if _is_object(base) or _is_object(exponent):
        return np.frompyfunc(lambda a, b: float(a) ** float(b), 2, 1)(base, exponent)
    return np.power(base, float(exponent) if isinstance(exponent, Fraction) else exponent)


@dataclass(frozen=True)
class Expression:
    """A parsed expression together with the lattice offsets it reads."""

    source: str
    tree: Node
    stencil: frozenset = field(default_factory=frozenset)
    params: frozenset = field(default_factory=frozenset)

    @property
    def is_local(self) -> bool:
        """True when only the reference point is read (point-symmetry locality)."""
        return self.stencil <= {(0, 0)}

    def evaluate(self, lookup: Mapping[tuple[str, int, int], Any], params: Mapping[str, Any] | None = None, mode: str = "double"):
        """Evaluate with ``lookup[(name, di, dj)]`` giving lattice values.

        ``mode="auto"`` keeps literals exact whenever some looked-up value is
        a Fraction (or an object array), and uses doubles otherwise.
        """
        params = params or {}
        if mode == "auto":
            mode = "rational" if any(_is_object(v) for v in lookup.values()) else "double"

        def num(value: Fraction):
            return value if mode == "rational" else float(value)

        def ev(node):
            if isinstance(node, Num):
                return num(node.value)
            if isinstance(node, Var):
                key = (node.name, node.di, node.dj)
                if key not in lookup:
                    raise EvaluationError(f"no value for {node.name}[{node.di},{node.dj}]")
                return lookup[key]
            if isinstance(node, Param):
                if node.name not in params:
                    raise EvaluationError(f"unknown parameter {node.name!r} at {node.span[0]}:{node.span[1]}")
                return params[node.name]
            if isinstance(node, Unary):
                v = ev(node.operand)
                return -v if node.op == "-" else v
            if isinstance(node, BinOp):
                a, b = ev(node.left), ev(node.right)
                if node.op == "+":
                    return a + b
                if node.op == "-":
                    return a - b
                if node.op == "*":
                    return a * b
                if node.op == "/":
                    return a / b
                return _power(a, b)
            if isinstance(node, Call):
                v = ev(node.arg)
                funcs = _OBJ_FUNCS if _is_object(v) else _FLOAT_FUNCS
                return funcs[node.func](v)
            raise TypeError(node)

        return ev(self.tree)

    def bind(self, offsets, params: Mapping[str, Any] | None = None, mode: str = "auto"):
        """Callable ``f(xs, ts, us)`` reading values aligned with ``offsets``."""
        offsets = [tuple(o) for o in offsets]
        missing = self.stencil - set(offsets)
        if missing:
            raise EvaluationError(f"offsets {sorted(missing)} not provided")

        def fn(xs, ts, us):
            lookup = {}
            for k, (di, dj) in enumerate(offsets):
                lookup[("x", di, dj)] = xs[k]
                lookup[("t", di, dj)] = ts[k]
                lookup[("u", di, dj)] = us[k]
            return self.evaluate(lookup, params, mode)

        return fn


def _compile(source: str, tree: Node) -> Expression:
    stencil, params = set(), set()
    for node in _walk(tree):
        if isinstance(node, Var):
            stencil.add((node.di, node.dj))
        elif isinstance(node, Param):
            params.add(node.name)
    return Expression(source, tree, frozenset(stencil), frozenset(params))


def parse(source: str) -> Expression:
    """Parse a single expression."""
    exprs = parse_many(source)
    if len(exprs) != 1:
        raise ParseError("expected a single expression", (0, len(source)), source)
    return exprs[0]


def parse_many(source: str) -> list[Expression]:
    """Parse ``expr ; expr ; ...`` (used for ``xi_x ; xi_t ; phi`` triples)."""
    return [_compile(source, tree) for tree in _Parser(source).field()]
