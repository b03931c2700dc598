"""Surface syntax for operators: a tokenizer, a recursive-descent parser, a printer and an evaluator.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "∘" | "/") unary)*
    unary  := ("+" | "-") unary | power
    power  := atom ("^" exponent)?
    exponent := INT | "(" ["-"] INT ["/" INT] ")"
    atom   := NUMBER ["i"] | "i" | "q" | "x" | "S" | "(" expr ")"

``S`` is sigma_q, ``∘`` is an alias of ``*``, and ``2.5i`` is an imaginary literal.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction

from .context import QContext
from .series import SeriesError, TruncatedPuiseuxSeries
from .skewop import SkewOperator


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.message = message
        self.position = position


# -- AST -----------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: Decimal
    imag: bool = False


@dataclass(frozen=True)
class Sym:
    name: str  # "q", "x" or "S"


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str  # "+", "-", "*", "/"
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exp: Fraction


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    if isinstance(node, Pow):
        return 4
    return 5


def to_text(node) -> str:
    """Print with the minimal parentheses that keep the tree shape."""
    if isinstance(node, Num):
        return str(node.value) + ("i" if node.imag else "")
    if isinstance(node, Sym):
        return node.name
    if isinstance(node, Neg):
        inner = to_text(node.arg)
        return "-" + (f"({inner})" if _prec(node.arg) < 3 else inner)
    if isinstance(node, Pow):
        base = to_text(node.base)
        if _prec(node.base) < 5:
            base = f"({base})"
        e = node.exp
        if e.denominator == 1 and e >= 0:
            return f"{base}^{e.numerator}"
        return f"{base}^({e})"
    p = _PREC[node.op]
    left, right = to_text(node.left), to_text(node.right)
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"


# -- tokenizer -----------------------------------------------------------

_NUMBER = re.compile(r"(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?")


@dataclass(frozen=True)
class Token:
    kind: str  # NUM, SYM, OP, END
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    out = []
    k = 0
    while k < len(text):
        ch = text[k]
        if ch.isspace():
            k += 1
            continue
        m = _NUMBER.match(text, k)
        if m:
            end = m.end()
            lit = m.group(0)
            if end < len(text) and text[end] == "i":
                lit += "i"
                end += 1
            out.append(Token("NUM", lit, k))
            k = end
            continue
        if ch in "iqxS":
            out.append(Token("SYM", ch, k))
        elif ch in "+-*/^()∘":
            out.append(Token("OP", "*" if ch == "∘" else ch, k))
        else:
            raise ParseError(f"unexpected character {ch!r}", k)
        k += 1
    out.append(Token("END", "", len(text)))
    return out


# -- parser --------------------------------------------------------------

class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.k = 0

    def peek(self) -> Token:
        return self.toks[self.k]

    def take(self) -> Token:
        t = self.toks[self.k]
        self.k += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t.kind != "OP" or t.text != text:
            raise ParseError(f"expected {text!r}", t.pos)
        return self.take()

    def is_op(self, *ops) -> bool:
        t = self.peek()
        return t.kind == "OP" and t.text in ops

    def expr(self):
        node = self.term()
        while self.is_op("+", "-"):
            op = self.take().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.is_op("*", "/"):
            op = self.take().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.is_op("-"):
            self.take()
            return Neg(self.unary())
        if self.is_op("+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.is_op("^"):
            caret = self.take()
            return Pow(base, self.exponent(caret.pos))
        return base

    def _int(self) -> int:
        t = self.peek()
        if t.kind != "NUM" or not t.text.isdigit():
            raise ParseError("expected an integer exponent", t.pos)
        self.take()
        return int(t.text)

    def exponent(self, at: int) -> Fraction:
        if self.is_op("("):
            self.take()
            sign = 1
            if self.is_op("-"):
                self.take()
                sign = -1
            num = self._int()
            den = 1
            if self.is_op("/"):
                self.take()
                t = self.peek()
                den = self._int()
                if den == 0:
                    raise ParseError("zero denominator in exponent", t.pos)
            self.expect(")")
            return Fraction(sign * num, den)
        return Fraction(self._int())

    def atom(self):
        t = self.peek()
        if t.kind == "NUM":
            self.take()
            imag = t.text.endswith("i")
            return Num(Decimal(t.text[:-1] if imag else t.text), imag)
        if t.kind == "SYM":
            self.take()
            if t.text == "i":
                return Num(Decimal(1), True)
            return Sym(t.text)
        if self.is_op("("):
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        if t.kind == "END":
            raise ParseError("unexpected end of input", t.pos)
        raise ParseError(f"unexpected {t.text!r}", t.pos)


def parse_ast(text: str):
    p = _Parser(text)
    node = p.expr()
    t = p.peek()
    if t.kind != "END":
        raise ParseError(f"unexpected {t.text!r}", t.pos)
    return node


# -- evaluation ----------------------------------------------------------

class EvaluationError(ValueError):
    pass


def _scalar_series(op: SkewOperator):
    """The coefficient of an operator free of S, or None."""
    if op.order > 0:
        return None
    if op.is_zero():
        return TruncatedPuiseuxSeries.zero(op.ctx, op.ram)
    return op.coeffs[0]


def evaluate(node, ctx: QContext) -> SkewOperator:
    mp = ctx.mp
    if isinstance(node, Num):
        v = mp.mpf(str(node.value))
        return SkewOperator.scalar(ctx, mp.mpc(0, v) if node.imag else mp.mpc(v))
    if isinstance(node, Sym):
        if node.name == "q":
            return SkewOperator.scalar(ctx, ctx.q)
        if node.name == "x":
            return SkewOperator.scalar(ctx, TruncatedPuiseuxSeries.monomial(ctx, 1, 1))
        return SkewOperator.sigma_power(ctx, 1)
    if isinstance(node, Neg):
        return -evaluate(node.arg, ctx)
    if isinstance(node, Pow):
        return _power(node, ctx)
    left, right = evaluate(node.left, ctx), evaluate(node.right, ctx)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    s = _scalar_series(right)
    if s is None:
        raise EvaluationError("division by an expression containing S")
    if s.is_zero():
        raise EvaluationError("division by zero")
    return left * SkewOperator.scalar(ctx, s.inverse())


def _power(node: Pow, ctx: QContext) -> SkewOperator:
    e = node.exp
    base = node.base
    if isinstance(base, Sym) and base.name == "S":
        if e.denominator != 1 or e < 0:
            raise EvaluationError(f"S-powers must be nonnegative integers, got {e}")
        return SkewOperator.sigma_power(ctx, int(e))
    if isinstance(base, Sym) and base.name == "x":
        return SkewOperator.scalar(ctx, TruncatedPuiseuxSeries.monomial(ctx, 1, e.numerator, e.denominator))
    if isinstance(base, Sym) and base.name == "q":
        return SkewOperator.scalar(ctx, ctx.qpow(e.numerator, e.denominator))
    if e.denominator != 1:
        raise EvaluationError("fractional powers apply to x and q only")
    val = evaluate(base, ctx)
    n = int(e)
    if n < 0:
        s = _scalar_series(val)
        if s is None:
            raise EvaluationError("negative powers of an expression containing S")
        try:
            val = SkewOperator.scalar(ctx, s.inverse())
        except SeriesError as exc:
            raise EvaluationError(str(exc)) from exc
        n = -n
    out = SkewOperator.scalar(ctx, 1)
    for _ in range(n):
        out = out * val
    return out


def parse_operator(text: str, ctx: QContext) -> SkewOperator:
    """Parse and evaluate; coefficients are collected per power of S."""
    op = evaluate(parse_ast(text), ctx)
    if op.is_zero():
        raise EvaluationError("the expression is the zero operator")
    return op
