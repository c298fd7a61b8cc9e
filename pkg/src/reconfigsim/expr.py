"""Guard and assertion expressions.

Grammar (lowest to highest precedence, all binary operators left-associative)::

    or    := and ('||' and)*
    and   := cmp ('&&' cmp)*
    cmp   := unary (('=='|'!='|'<'|'<='|'>'|'>=') unary)*
    unary := '!' unary | atom
    atom  := NUMBER | NAME | '(' or ')'

Numbers are decimal or ``0x`` hexadecimal. Names may contain one dot so that
``reg1.q`` can address a datapath signal directly. Comparisons are unsigned.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ExprSyntax

__all__ = [
    "Lit", "Var", "Not", "Binary", "Expr",
    "parse_expr", "format_expr", "evaluate", "variables", "compile_expr",
]


@dataclass(frozen=True)
class Lit:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Lit | Var | Not | Binary

_COMPARE = ("==", "!=", "<", "<=", ">", ">=")
_PREC = {"||": 1, "&&": 2, **{op: 3 for op in _COMPARE}}

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>0[xX][0-9a-fA-F]+|[0-9]+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)?)
  | (?P<op>==|!=|<=|>=|&&|\|\||<|>|!|\(|\))
""", re.VERBOSE)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntax(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup == "num" and m.end() < len(text) and (
                text[m.end()].isalnum() or text[m.end()] == "_"):
            raise ExprSyntax("malformed number", pos)
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
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

    def binary(self, min_prec):
        left = self.unary()
        while True:
            kind, text, _ = self.peek()
            prec = _PREC.get(text) if kind == "op" else None
            if prec is None or prec < min_prec:
                return left
            self.take()
            left = Binary(text, left, self.binary(prec + 1))

    def unary(self):
        kind, text, pos = self.take()
        if kind == "op" and text == "!":
            return Not(self.unary())
        if kind == "num":
            return Lit(int(text, 0))
        if kind == "name":
            return Var(text)
        if kind == "op" and text == "(":
            inner = self.binary(1)
            kind, text, pos = self.take()
            if text != ")" or kind != "op":
                raise ExprSyntax("expected ')'", pos)
            return inner
        if kind == "end":
            raise ExprSyntax("unexpected end of expression", pos)
        raise ExprSyntax(f"unexpected {text!r}", pos)


def parse_expr(text: str) -> Expr:
    """Parse ``text`` into an expression tree; raises :class:`ExprSyntax`."""
    p = _Parser(text)
    tree = p.binary(1)
    kind, tok, pos = p.peek()
    if kind != "end":
        raise ExprSyntax(f"unexpected {tok!r}", pos)
    return tree


def format_expr(e: Expr, _prec: int = 0) -> str:
    """Render with the minimum parentheses needed to re-parse to ``e``."""
    if isinstance(e, Lit):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Not):
        return "!" + format_expr(e.operand, 4)
    prec = _PREC[e.op]
    # right operand binds one level tighter to preserve left associativity
    s = f"{format_expr(e.left, prec)} {e.op} {format_expr(e.right, prec + 1)}"
    return f"({s})" if prec < _prec else s


def variables(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Not):
        return variables(e.operand)
    if isinstance(e, Binary):
        return variables(e.left) | variables(e.right)
    return set()


def evaluate(e: Expr, env) -> int:
    """Evaluate over ``env`` (a mapping name -> int).

    Comparisons and logical operators yield 0 or 1; a bare literal or
    variable yields its own value.
    """
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Not):
        return int(not evaluate(e.operand, env))
    op = e.op
    if op == "&&":
        return int(bool(evaluate(e.left, env)) and bool(evaluate(e.right, env)))
    if op == "||":
        return int(bool(evaluate(e.left, env)) or bool(evaluate(e.right, env)))
    a = evaluate(e.left, env)
    b = evaluate(e.right, env)
    if op == "==":
        return int(a == b)
    if op == "!=":
        return int(a != b)
    if op == "<":
        return int(a < b)
    if op == "<=":
        return int(a <= b)
    if op == ">":
        return int(a > b)
    return int(a >= b)


def _py(e, slot_of):
    if isinstance(e, Lit):
        return str(e.value)
    if isinstance(e, Var):
        return f"v[{slot_of(e.name)}]"
    if isinstance(e, Not):
        return f"(not {_py(e.operand, slot_of)})"
    left, right = _py(e.left, slot_of), _py(e.right, slot_of)
    if e.op == "&&":
        return f"(bool({left}) and bool({right}))"
    if e.op == "||":
        return f"(bool({left}) or bool({right}))"
    return f"({left} {e.op} {right})"


def compile_expr(e: Expr, slot_of):
    """Compile to ``f(v) -> bool`` reading variables from list slots."""
    src = f"lambda v: bool({_py(e, slot_of)})"
    return eval(src, {"__builtins__": {"bool": bool}})
