"""Small arithmetic expression language for coefficient functions.

Expressions are compiled to a postfix program (two flat arrays) so that the
same program can be run by the numba integrator and by the vectorised numpy
evaluator used for validation sampling.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Names are ``x``, the constants ``pi`` and ``e``, and any parameter passed to
:func:`compile_expr`. Parameters and constants are folded at compile time.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError

# opcodes (shared with _kernels.py)
OP_CONST = 0
OP_X = 1
OP_ADD = 2
OP_SUB = 3
OP_MUL = 4
OP_DIV = 5
OP_POW = 6
OP_NEG = 7
OP_COSH = 8
OP_COS = 9
OP_SIN = 10
OP_EXP = 11
OP_ABS = 12
OP_SGN = 13
OP_SQRT = 14
OP_TANH = 15
OP_SINH = 16
OP_LOG = 17

FUNCTIONS = {
    "cosh": OP_COSH,
    "cos": OP_COS,
    "sin": OP_SIN,
    "exp": OP_EXP,
    "abs": OP_ABS,
    "sgn": OP_SGN,
    "sqrt": OP_SQRT,
    "tanh": OP_TANH,
    "sinh": OP_SINH,
    "log": OP_LOG,
}

_BINARY = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV, "^": OP_POW}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str]]:
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos:].strip()[:1]!r} at {pos} in {text!r}")
        kind = m.lastgroup
        out.append((kind, m.group(kind)))
        pos = m.end()
    return out


# python-side evaluation of a single opcode, used for constant folding
def _apply_unary(op: int, a: float) -> float:
    if op == OP_NEG:
        return -a
    if op == OP_COSH:
        return math.cosh(a)
    if op == OP_COS:
        return math.cos(a)
    if op == OP_SIN:
        return math.sin(a)
    if op == OP_EXP:
        return math.exp(a)
    if op == OP_ABS:
        return abs(a)
    if op == OP_SGN:
        return float(np.sign(a))
    if op == OP_SQRT:
        return math.sqrt(a)
    if op == OP_TANH:
        return math.tanh(a)
    if op == OP_SINH:
        return math.sinh(a)
    if op == OP_LOG:
        return math.log(a)
    raise AssertionError(op)


def _apply_binary(op: int, a: float, b: float) -> float:
    if op == OP_ADD:
        return a + b
    if op == OP_SUB:
        return a - b
    if op == OP_MUL:
        return a * b
    if op == OP_DIV:
        return a / b
    if op == OP_POW:
        return a * a if b == 2.0 else a**b
    raise AssertionError(op)


class _Parser:
    def __init__(self, text: str, params: dict[str, float]):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.params = params
        # postfix program; every entry is (op, const) and constant subtrees
        # are kept folded as single OP_CONST entries
        self.code: list[tuple[int, float]] = []

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, value):
        kind, tok = self.take()
        if tok != value:
            raise ParseError(f"expected {value!r} in {self.text!r}, got {tok!r}")

    def emit_unary(self, op):
        last = self.code[-1]
        if last[0] == OP_CONST:
            self.code[-1] = (OP_CONST, _apply_unary(op, last[1]))
        else:
            self.code.append((op, 0.0))

    def emit_binary(self, op):
        a, b = self.code[-2], self.code[-1]
        if a[0] == OP_CONST and b[0] == OP_CONST:
            self.code[-2:] = [(OP_CONST, _apply_binary(op, a[1], b[1]))]
        else:
            self.code.append((op, 0.0))

    def parse(self):
        if not self.tokens:
            raise ParseError("empty expression")
        self.expr()
        if self.i != len(self.tokens):
            raise ParseError(f"trailing input {self.peek()[1]!r} in {self.text!r}")
        return self.code

    def expr(self):
        self.term()
        while self.peek()[1] in ("+", "-"):
            op = _BINARY[self.take()[1]]
            self.term()
            self.emit_binary(op)

    def term(self):
        self.unary()
        while self.peek()[1] in ("*", "/"):
            op = _BINARY[self.take()[1]]
            self.unary()
            self.emit_binary(op)

    def unary(self):
        tok = self.peek()[1]
        if tok == "-":
            self.take()
            self.unary()
            self.emit_unary(OP_NEG)
        elif tok == "+":
            self.take()
            self.unary()
        else:
            self.power()

    def power(self):
        self.atom()
        if self.peek()[1] == "^":
            self.take()
            self.unary()
            self.emit_binary(OP_POW)

    def atom(self):
        kind, tok = self.take()
        if kind == "num":
            self.code.append((OP_CONST, float(tok)))
        elif kind == "name":
            if self.peek()[1] == "(":
                if tok not in FUNCTIONS:
                    raise ParseError(f"unknown function {tok!r} in {self.text!r}")
                self.take()
                self.expr()
                self.expect(")")
                self.emit_unary(FUNCTIONS[tok])
            elif tok == "x":
                self.code.append((OP_X, 0.0))
            elif tok in self.params:
                self.code.append((OP_CONST, float(self.params[tok])))
            elif tok == "pi":
                self.code.append((OP_CONST, math.pi))
            elif tok == "e":
                self.code.append((OP_CONST, math.e))
            else:
                raise ParseError(f"unknown name {tok!r} in {self.text!r}")
        elif tok == "(":
            self.expr()
            self.expect(")")
        else:
            raise ParseError(f"unexpected token {tok!r} in {self.text!r}")


@dataclass(frozen=True)
class Program:
    """Compiled postfix program. ``ops``/``args`` are read-only arrays."""

    source: str
    ops: np.ndarray = field(repr=False)
    args: np.ndarray = field(repr=False)

    @property
    def is_constant(self) -> bool:
        return len(self.ops) == 1 and self.ops[0] == OP_CONST

    def __call__(self, x):
        return evaluate(self, x)


def compile_expr(text: str, params: dict[str, float] | None = None) -> Program:
    code = _Parser(str(text), dict(params or {})).parse()
    ops = np.array([c[0] for c in code], dtype=np.int64)
    args = np.array([c[1] for c in code], dtype=np.float64)
    ops.setflags(write=False)
    args.setflags(write=False)
    return Program(str(text), ops, args)


def evaluate(prog: Program, x):
    """Vectorised evaluation; returns an array shaped like ``x``."""
    x = np.asarray(x, dtype=np.float64)
    stack: list[np.ndarray] = []
    for op, arg in zip(prog.ops.tolist(), prog.args.tolist()):
        if op == OP_CONST:
            stack.append(np.full_like(x, arg))
        elif op == OP_X:
            stack.append(x)
        elif op in (OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_POW):
            b = stack.pop()
            a = stack.pop()
            if op == OP_ADD:
                stack.append(a + b)
            elif op == OP_SUB:
                stack.append(a - b)
            elif op == OP_MUL:
                stack.append(a * b)
            elif op == OP_DIV:
                stack.append(a / b)
            else:
                stack.append(np.where(b == 2.0, a * a, np.power(a, b)))
        else:
            a = stack.pop()
            stack.append(_NP_UNARY[op](a))
    (out,) = stack
    return out


_NP_UNARY = {
    OP_NEG: np.negative,
    OP_COSH: np.cosh,
    OP_COS: np.cos,
    OP_SIN: np.sin,
    OP_EXP: np.exp,
    OP_ABS: np.abs,
    OP_SGN: np.sign,
    OP_SQRT: np.sqrt,
    OP_TANH: np.tanh,
    OP_SINH: np.sinh,
    OP_LOG: np.log,
}
