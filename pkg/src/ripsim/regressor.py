"""Tiny expression language for disturbance regressor terms.

Each regressor component is a product of factors, where a factor is a
number literal, one of the state variables q1/q2/p1/p2, or sin(...) /
cos(...) applied to another such expression:

    expr   := factor ('*' factor)*
    factor := NUMBER | VAR | FN '(' expr ')'
    FN     := 'sin' | 'cos'

Sums are not part of the language: a disturbance d = f(q,p)^T theta is
a weighted sum of regressor components by construction, with the
weights living in theta. Extending the grammar (e.g. '+', powers) only
requires new alternatives in _parse_factor and one AST node each.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

VARIABLES = ("q1", "q2", "p1", "p2")
FUNCTIONS = {"sin": math.sin, "cos": math.cos}

_TOKEN_RE = re.compile(r"""
    \s*(?:
        (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
      | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
      | (?P<star>\*)
      | (?P<lparen>\()
      | (?P<rparen>\))
    )""", re.VERBOSE)


class ParseError(Exception):
    """Malformed regressor expression; carries the character position."""

    def __init__(self, text: str, pos: int, message: str):
        self.text = text
        self.pos = pos
        super().__init__(f"{message} at position {pos} in {text!r}")


class UnknownVariable(ParseError):
    """Identifier outside {q1, q2, p1, p2}."""

    def __init__(self, text: str, pos: int, name: str):
        self.name = name
        ParseError.__init__(
            self, text, pos,
            f"unknown variable {name!r} (expected one of {', '.join(VARIABLES)})")


@dataclass(frozen=True)
class Number:
    value: float

    def __call__(self, q1, q2, p1, p2):
        return self.value

    def unparse(self) -> str:
        return repr(self.value)


@dataclass(frozen=True)
class Variable:
    name: str

    def __call__(self, q1, q2, p1, p2):
        # positional lookup compiled at parse time would not beat this
        # dict-free branch for the four-name alphabet
        if self.name == "q1":
            return q1
        if self.name == "q2":
            return q2
        if self.name == "p1":
            return p1
        return p2

    def unparse(self) -> str:
        return self.name


@dataclass(frozen=True)
class Call:
    fn: str
    arg: object

    def __call__(self, q1, q2, p1, p2):
        return FUNCTIONS[self.fn](self.arg(q1, q2, p1, p2))

    def unparse(self) -> str:
        return f"{self.fn}({self.arg.unparse()})"


@dataclass(frozen=True)
class Product:
    factors: tuple

    def __call__(self, q1, q2, p1, p2):
        out = 1.0
        for f in self.factors:
            out *= f(q1, q2, p1, p2)
        return out

    def unparse(self) -> str:
        return "*".join(f.unparse() for f in self.factors)


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.items = []  # (kind, value, pos)
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None or m.end() == pos:
                # skip trailing whitespace before declaring failure
                if text[pos:].strip() == "":
                    break
                raise ParseError(text, pos, f"unexpected character {text[pos]!r}")
            kind = m.lastgroup
            self.items.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.items.append(("end", "", len(text)))
        self.i = 0

    def peek(self):
        return self.items[self.i]

    def take(self):
        tok = self.items[self.i]
        self.i += 1
        return tok


def _parse_factor(toks: _Tokens):
    kind, value, pos = toks.take()
    if kind == "number":
        return Number(float(value))
    if kind == "ident":
        nkind, _, npos = toks.peek()
        if nkind == "lparen":
            if value not in FUNCTIONS:
                raise ParseError(toks.text, pos,
                                 f"unknown function {value!r} (expected sin or cos)")
            toks.take()
            arg = _parse_expr(toks)
            ckind, _, cpos = toks.take()
            if ckind != "rparen":
                raise ParseError(toks.text, cpos, "expected ')'")
            return Call(value, arg)
        if value not in VARIABLES:
            raise UnknownVariable(toks.text, pos, value)
        return Variable(value)
    raise ParseError(toks.text, pos, "expected a number, variable, or sin/cos call")


def _parse_expr(toks: _Tokens):
    factors = [_parse_factor(toks)]
    while toks.peek()[0] == "star":
        toks.take()
        factors.append(_parse_factor(toks))
    if len(factors) == 1:
        return factors[0]
    return Product(tuple(factors))


def parse_term(text: str):
    """Parse a single regressor component into an evaluable AST."""
    toks = _Tokens(text)
    node = _parse_expr(toks)
    kind, value, pos = toks.peek()
    if kind != "end":
        raise ParseError(text, pos, f"unexpected token {value!r} after expression")
    return node


@dataclass(frozen=True)
class RegressorSpec:
    """Ordered basis f(q,p) of the disturbance model d = f(q,p)^T theta."""

    terms: tuple

    def __post_init__(self):
        if len(self.terms) < 1:
            raise ValueError("regressor needs at least one term")

    @property
    def ell(self) -> int:
        return len(self.terms)

    def unparse(self) -> list[str]:
        return [t.unparse() for t in self.terms]

    def eval_flat(self, q1: float, q2: float, p1: float, p2: float) -> list[float]:
        return [t(q1, q2, p1, p2) for t in self.terms]


def parse_regressor(texts: list[str]) -> RegressorSpec:
    """Parse the list of component expressions, preserving order."""
    return RegressorSpec(tuple(parse_term(t) for t in texts))


def eval_regressor(spec: RegressorSpec, s) -> np.ndarray:
    """f(q,p) at a State."""
    return np.array(spec.eval_flat(s.q[0], s.q[1], s.p[0], s.p[1]))
