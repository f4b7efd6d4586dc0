"""Arithmetic expression DSL for right-hand sides, weight formulas and combiners.

Grammar (EBNF):

    expr    = term , { ("+" | "-") , term } ;
    term    = unary , { ("*" | "/") , unary } ;
    unary   = "-" , unary | power ;
    power   = atom , [ "^" , unary ] ;            (* right associative *)
    atom    = NUMBER | CONSTANT | VARIABLE
            | FUNCTION , "(" , expr , { "," , expr } , ")"
            | "(" , expr , ")" ;

"^" binds tighter than unary minus, so "-2^2" is -(2^2).  Functions are
sin, cos, exp, ln, abs, sqrt, gamma (one argument) and pow (two arguments);
constants are pi and e.  Evaluation is IEEE double; any operation whose
result would be non-finite (division by zero, ln of a non-positive number,
overflow, 0 raised to a negative power) raises EvalError instead of
propagating inf or NaN.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

from .errors import EvalError, ParseError, UnknownIdentifier
from .special import gamma_fn

__all__ = ["Expr", "parse", "evaluate", "pretty", "free_variables"]

FUNCTIONS = {"sin": 1, "cos": 1, "exp": 1, "ln": 1, "abs": 1, "sqrt": 1,
             "gamma": 1, "pow": 2}
CONSTANTS = {"pi": math.pi, "e": math.e}

Number = Union[float, np.ndarray]


@dataclass(frozen=True)
class Node:
    span: tuple[int, int] = field(compare=False, kw_only=True)


@dataclass(frozen=True)
class Num(Node):
    value: float


@dataclass(frozen=True)
class Const(Node):
    name: str


@dataclass(frozen=True)
class Var(Node):
    name: str


@dataclass(frozen=True)
class Neg(Node):
    arg: "Expr"


@dataclass(frozen=True)
class Bin(Node):
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call(Node):
    fn: str
    args: tuple["Expr", ...]


Expr = Union[Num, Const, Var, Neg, Bin, Call]


# ------------------------------------------------------------------ lexer

_OPS = set("+-*/^(),")


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    """Tokens as (kind, text, offset); kind in {num, name, op}."""
    tokens = []
    i = 0
    n = len(src)
    while i < n:
        c = src[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and src[i + 1].isdigit()):
            j = i
            while j < n and (src[j].isdigit() or src[j] == "."):
                j += 1
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    j = k
                    while j < n and src[j].isdigit():
                        j += 1
            text = src[i:j]
            try:
                float(text)
            except ValueError:
                raise ParseError(f"malformed number {text!r}", i) from None
            tokens.append(("num", text, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append(("name", src[i:j], i))
            i = j
            continue
        if c in _OPS:
            tokens.append(("op", c, i))
            i += 1
            continue
        raise ParseError(f"unexpected character {c!r}", i)
    return tokens


# ------------------------------------------------------------------ parser

class _Parser:
    def __init__(self, src: str, variables: frozenset[str]):
        self.src = src
        self.tokens = _tokenize(src)
        self.pos = 0
        self.variables = variables

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", len(self.src))
        self.pos += 1
        return tok

    def expect(self, text: str):
        tok = self.peek()
        if tok is None or tok[1] != text:
            off = tok[2] if tok else len(self.src)
            raise ParseError(f"expected {text!r}", off)
        return self.next()

    def parse(self) -> Expr:
        node = self.expr()
        tok = self.peek()
        if tok is not None:
            raise ParseError(f"unexpected token {tok[1]!r}", tok[2])
        return node

    def expr(self) -> Expr:
        node = self.term()
        while (tok := self.peek()) and tok[1] in "+-":
            self.next()
            rhs = self.term()
            node = Bin(tok[1], node, rhs, span=(node.span[0], rhs.span[1]))
        return node

    def term(self) -> Expr:
        node = self.unary()
        while (tok := self.peek()) and tok[1] in "*/":
            self.next()
            rhs = self.unary()
            node = Bin(tok[1], node, rhs, span=(node.span[0], rhs.span[1]))
        return node

    def unary(self) -> Expr:
        tok = self.peek()
        if tok and tok[1] == "-":
            self.next()
            arg = self.unary()
            return Neg(arg, span=(tok[2], arg.span[1]))
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        tok = self.peek()
        if tok and tok[1] == "^":
            self.next()
            # right associative; exponent may start with unary minus
            exponent = self.unary()
            return Bin("^", base, exponent, span=(base.span[0], exponent.span[1]))
        return base

    def atom(self) -> Expr:
        kind, text, off = self.next()
        if kind == "num":
            return Num(float(text), span=(off, off + len(text)))
        if kind == "name":
            if text in FUNCTIONS:
                self.expect("(")
                args = [self.expr()]
                while (tok := self.peek()) and tok[1] == ",":
                    self.next()
                    args.append(self.expr())
                closing = self.expect(")")
                if len(args) != FUNCTIONS[text]:
                    raise ParseError(
                        f"{text} takes {FUNCTIONS[text]} argument(s), got {len(args)}", off)
                return Call(text, tuple(args), span=(off, closing[2] + 1))
            if text in CONSTANTS:
                return Const(text, span=(off, off + len(text)))
            if text in self.variables:
                return Var(text, span=(off, off + len(text)))
            raise UnknownIdentifier(text, off)
        if text == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ParseError(f"unexpected token {text!r}", off)


def parse(src: str, variables) -> Expr:
    """Parse `src` into an AST referencing only the declared variables."""
    if not src or not src.strip():
        raise ParseError("empty expression", 0)
    ast = _Parser(src, frozenset(variables)).parse()
    return ast


# ------------------------------------------------------------------ evaluation

_UNARY_FN = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "ln": np.log,
    "abs": np.abs,
    "sqrt": np.sqrt,
}


def _gamma_vec(x):
    if np.ndim(x) == 0:
        return gamma_fn(float(x))
    flat = np.asarray(x, float).ravel()
    out = np.array([gamma_fn(v) for v in flat])
    return out.reshape(np.shape(x))


def _check(value, node: Expr, src: str | None) -> Number:
    ok = np.all(np.isfinite(value))
    if not ok:
        frag = src[node.span[0]:node.span[1]] if src else ""
        raise EvalError("non-finite value", node.span, frag)
    return value


def evaluate(ast: Expr, bindings: Mapping[str, Number], src: str | None = None) -> Number:
    """Evaluate the AST; bindings may hold floats or numpy arrays.

    Every intermediate result is checked for finiteness so that division by
    zero, logs of non-positive numbers and overflow surface as EvalError.
    """
    with np.errstate(all="ignore"):
        return _eval(ast, bindings, src)


def _eval(node: Expr, env: Mapping[str, Number], src) -> Number:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise EvalError(f"unbound variable {node.name!r}", node.span) from None
    if isinstance(node, Neg):
        return -_eval(node.arg, env, src)
    if isinstance(node, Bin):
        a = _eval(node.left, env, src)
        b = _eval(node.right, env, src)
        if node.op == "+":
            v = np.add(a, b)
        elif node.op == "-":
            v = np.subtract(a, b)
        elif node.op == "*":
            v = np.multiply(a, b)
        elif node.op == "/":
            v = np.divide(a, b)
        else:  # "^"
            v = _power(a, b)
        return _check(v, node, src)
    if isinstance(node, Call):
        args = [_eval(arg, env, src) for arg in node.args]
        if node.fn == "pow":
            v = _power(args[0], args[1])
        elif node.fn == "gamma":
            try:
                v = _gamma_vec(args[0])
            except Exception:
                frag = src[node.span[0]:node.span[1]] if src else ""
                raise EvalError("gamma of non-positive argument",
                                node.span, frag) from None
        else:
            v = _UNARY_FN[node.fn](args[0])
        return _check(v, node, src)
    raise TypeError(f"not an expression node: {node!r}")


def _power(a, b):
    # negative base with non-integer exponent would be complex; numpy yields
    # NaN for float inputs which the finiteness check then converts to an error
    return np.power(np.asarray(a, float) if np.ndim(a) else float(a), b)


# ------------------------------------------------------------------ utilities

def pretty(node: Expr) -> str:
    """Fully parenthesized rendering; reparses to a structurally equal AST."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{pretty(node.arg)})"
    if isinstance(node, Bin):
        return f"({pretty(node.left)} {node.op} {pretty(node.right)})"
    if isinstance(node, Call):
        return f"{node.fn}({', '.join(pretty(a) for a in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")


def free_variables(node: Expr) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Neg):
        return free_variables(node.arg)
    if isinstance(node, Bin):
        return free_variables(node.left) | free_variables(node.right)
    if isinstance(node, Call):
        out: set[str] = set()
        for a in node.args:
            out |= free_variables(a)
        return out
    return set()
