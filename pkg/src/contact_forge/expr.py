"""A small arithmetic expression language over named coordinates.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := unary ("^" factor)?
    unary  := "-" unary | atom
    atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"

``-a^b`` therefore parses as ``(-a)^b``.  Expressions compile to closures
that accept either floats or :class:`~contact_forge.dual.Dual` values, so the
same tree serves plain evaluation and forward-mode differentiation.
"""

from __future__ import annotations

import functools
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

from . import dual
from .dual import Dual, DualValue, new_tag, primal, tangent
from .errors import DomainError, ParseError, UnboundSymbol, UnknownFunction

FUNCTIONS: dict[str, Callable] = {
    "sin": dual.sin,
    "cos": dual.cos,
    "tan": dual.tan,
    "exp": dual.exp,
    "ln": dual.log,
    "sqrt": dual.sqrt,
    "abs": dual.fabs,
}
CONSTANTS = {"pi": math.pi}
RESERVED = frozenset(FUNCTIONS) | frozenset(CONSTANTS)


class Expr:
    """Base class of expression nodes."""

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Num(Expr):
    value: float
    offset: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Sym(Expr):
    name: str
    offset: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Const(Expr):
    name: str
    offset: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr
    offset: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr
    offset: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr
    offset: int = field(default=0, compare=False, repr=False)


# -- lexing -------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "number", "ident", an operator character, or "end"
    text: str
    offset: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    byte = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", byte,
                             {"number", "identifier", "operator", "(", ")"})
        kind = m.lastgroup
        chunk = m.group()
        if kind == "number":
            tokens.append(Token("number", chunk, byte))
        elif kind == "ident":
            tokens.append(Token("ident", chunk, byte))
        elif kind == "op":
            tokens.append(Token(chunk, chunk, byte))
        pos = m.end()
        byte += len(chunk.encode("utf-8"))
    tokens.append(Token("end", "", byte))
    return tokens


# -- parsing ------------------------------------------------------------------

_ATOM_START = {"number", "identifier", "(", "-"}


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, kind: str, also=()):
        if self.tok.kind != kind:
            found = self.tok.text or "end of input"
            raise ParseError(f"unexpected {found!r}", self.tok.offset, {kind, *also})
        return self.advance()

    def parse(self) -> Expr:
        if self.tok.kind == "end":
            raise ParseError("empty expression", 0, _ATOM_START)
        e = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.offset,
                             {"end of input", "+", "-", "*", "/", "^"})
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.tok.kind in ("+", "-"):
            op = self.advance()
            e = BinOp(op.kind, e, self.term(), op.offset)
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.tok.kind in ("*", "/"):
            op = self.advance()
            e = BinOp(op.kind, e, self.factor(), op.offset)
        return e

    def factor(self) -> Expr:
        base = self.unary()
        if self.tok.kind == "^":
            op = self.advance()
            return BinOp("^", base, self.factor(), op.offset)
        return base

    def unary(self) -> Expr:
        if self.tok.kind == "-":
            op = self.advance()
            return Neg(self.unary(), op.offset)
        return self.atom()

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "number":
            self.advance()
            return Num(float(t.text), t.offset)
        if t.kind == "ident":
            self.advance()
            if self.tok.kind == "(":
                if t.text not in FUNCTIONS:
                    raise UnknownFunction(t.text, t.offset)
                self.advance()
                arg = self.expr()
                self.expect(")", {"+", "-", "*", "/", "^"})
                return Call(t.text, arg, t.offset)
            if t.text in CONSTANTS:
                return Const(t.text, t.offset)
            if t.text in FUNCTIONS:
                raise ParseError(f"function {t.text!r} needs an argument", self.tok.offset, {"("})
            return Sym(t.text, t.offset)
        if t.kind == "(":
            self.advance()
            e = self.expr()
            self.expect(")", {"+", "-", "*", "/", "^"})
            return e
        found = t.text or "end of input"
        raise ParseError(f"unexpected {found!r}", t.offset, _ATOM_START)


def parse(text: str) -> Expr:
    if not text or not text.strip():
        raise ParseError("empty expression", 0, _ATOM_START)
    return _Parser(text).parse()


# -- printing -----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return 4
    return 5


def to_text(e: Expr) -> str:
    """Render ``e`` so that :func:`parse` rebuilds the identical tree."""
    if isinstance(e, Num):
        v = float(e.value)
        return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)
    if isinstance(e, (Sym, Const)):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    if isinstance(e, Neg):
        inner = to_text(e.operand)
        return f"-{inner}" if _prec(e.operand) >= 4 else f"-({inner})"
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        left, right = to_text(e.left), to_text(e.right)
        if e.op == "^":
            # base must be a unary, exponent a factor
            if _prec(e.left) < 4:
                left = f"({left})"
            if _prec(e.right) < 3:
                right = f"({right})"
            return f"{left}^{right}"
        if _prec(e.left) < p:
            left = f"({left})"
        if _prec(e.right) <= p:
            right = f"({right})"
        return f"{left} {e.op} {right}"
    raise TypeError(f"not an expression node: {e!r}")


def symbols(e: Expr) -> frozenset[str]:
    if isinstance(e, Sym):
        return frozenset((e.name,))
    if isinstance(e, Neg):
        return symbols(e.operand)
    if isinstance(e, Call):
        return symbols(e.arg)
    if isinstance(e, BinOp):
        return symbols(e.left) | symbols(e.right)
    return frozenset()


# -- evaluation ---------------------------------------------------------------

_BINARY = {"+": dual.add, "-": dual.sub, "*": dual.mul, "/": dual.div, "^": dual.power}


def _checked(node: Expr, result):
    if not math.isfinite(primal(result)):
        raise DomainError("non-finite result", to_text(node))
    return result


def _build(node: Expr, index: Mapping[str, int]):
    if isinstance(node, Num):
        v = float(node.value)
        return lambda p: v
    if isinstance(node, Const):
        v = CONSTANTS[node.name]
        return lambda p: v
    if isinstance(node, Sym):
        try:
            i = index[node.name]
        except KeyError:
            raise UnboundSymbol(node.name) from None
        return lambda p: p[i]
    if isinstance(node, Neg):
        f = _build(node.operand, index)
        return lambda p: -f(p)
    if isinstance(node, Call):
        f = _build(node.arg, index)
        fn = FUNCTIONS[node.func]

        def call(p):
            try:
                return _checked(node, fn(f(p)))
            except DomainError as err:
                if err.subexpr is None:
                    raise DomainError(str(err), to_text(node)) from None
                raise

        return call
    if isinstance(node, BinOp):
        fl = _build(node.left, index)
        fr = _build(node.right, index)
        op = _BINARY[node.op]

        def binop(p):
            try:
                return _checked(node, op(fl(p), fr(p)))
            except DomainError as err:
                if err.subexpr is None:
                    raise DomainError(str(err), to_text(node)) from None
                raise

        return binop
    raise TypeError(f"not an expression node: {node!r}")


@functools.lru_cache(maxsize=4096)
def compile_expr(e: Expr, names: tuple[str, ...]) -> Callable[[Sequence], object]:
    """Compile ``e`` into ``fn(point)`` where ``point[i]`` is the value of ``names[i]``."""
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate coordinate names in {names}")
    return _build(e, {n: i for i, n in enumerate(names)})


@dataclass(frozen=True)
class Environment:
    """Coordinate values, optionally with a seed direction for differentiation."""

    values: Mapping[str, float]
    seed: Optional[Mapping[str, float]] = None

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.values)


def _as_expr(e) -> Expr:
    return parse(e) if isinstance(e, str) else e


def _prepare(e, env: Environment):
    e = _as_expr(e)
    missing = symbols(e) - set(env.values)
    if missing:
        raise UnboundSymbol(sorted(missing)[0])
    return e, compile_expr(e, env.names)


def evaluate(e, env: Environment) -> float:
    e, fn = _prepare(e, env)
    return float(fn([float(v) for v in env.values.values()]))


def evaluate_dual(e, env: Environment) -> DualValue:
    if env.seed is None:
        raise ValueError("evaluate_dual needs a seed direction")
    unknown = set(env.seed) - set(env.values)
    if unknown:
        raise UnboundSymbol(sorted(unknown)[0])
    e, fn = _prepare(e, env)
    tag = new_tag()
    point = [Dual(float(v), float(env.seed.get(k, 0.0)), tag) for k, v in env.values.items()]
    y = fn(point)
    return DualValue(float(primal(y)), float(tangent(y, tag)))
