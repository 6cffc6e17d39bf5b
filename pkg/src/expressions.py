"""
Arithmetic expressions used for target-metric formulas and builtin runners

Grammar:
    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := number | identifier | '-' factor | '(' expr ')'
"""

import re
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from src.errors import EvalError, ParseError, UnboundIdentifier

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<number>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/()])"
)
_IDENT_UNSAFE = re.compile(r"[^A-Za-z0-9_]")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    left: "Expr"
    right: "Expr"
    symbol = "?"


@dataclass(frozen=True)
class Add(BinOp):
    symbol = "+"


@dataclass(frozen=True)
class Sub(BinOp):
    symbol = "-"


@dataclass(frozen=True)
class Mul(BinOp):
    symbol = "*"


@dataclass(frozen=True)
class Div(BinOp):
    symbol = "/"


Expr = Num | Var | Neg | Add | Sub | Mul | Div

_BINARY = {"+": Add, "-": Sub, "*": Mul, "/": Div}
_PRECEDENCE = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Num: 4, Var: 4}


def factor_identifier(param_id: str) -> str:
    """Map a document id such as 'PAR-1' to an expression identifier ('PAR_1')"""
    ident = _IDENT_UNSAFE.sub("_", param_id)
    if not ident or ident[0].isdigit():
        ident = "_" + ident
    return ident


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ParseError(f"unexpected character {text[pos]!r}", _byte_offset(text, pos))
        kind = match.lastgroup
        if kind != "ws":
            tokens.append((kind, match.group(), _byte_offset(text, pos)))
        pos = match.end()
    tokens.append(("end", "", _byte_offset(text, len(text))))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.pos]

    def advance(self) -> tuple[str, str, int]:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def parse(self) -> Expr:
        expr = self.expr()
        kind, value, offset = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {value!r}", offset)
        return expr

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            symbol = self.advance()[1]
            node = _BINARY[symbol](node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            symbol = self.advance()[1]
            node = _BINARY[symbol](node, self.factor())
        return node

    def factor(self) -> Expr:
        kind, value, offset = self.advance()
        if kind == "number":
            return Num(float(value))
        if kind == "ident":
            return Var(value)
        if kind == "op" and value == "-":
            return Neg(self.factor())
        if kind == "op" and value == "(":
            node = self.expr()
            kind, value, offset = self.advance()
            if value != ")":
                raise ParseError("expected ')'", offset)
            return node
        if kind == "end":
            raise ParseError("unexpected end of expression", offset)
        raise ParseError(f"unexpected token {value!r}", offset)


def parse_expression(text: str) -> Expr:
    """
    Parse formula text into an expression tree

    Args:
        text: Formula such as "2*a + b"

    Returns:
        Expr: Tree with standard precedence and left associativity

    Raises:
        ParseError: With the byte offset of the offending token
    """
    return _Parser(text).parse()


def format_expression(expr: Expr) -> str:
    """Print an expression with the minimal parentheses needed to reparse it"""
    match expr:
        case Num(value):
            return repr(float(value))
        case Var(name):
            return name
        case Neg(operand):
            inner = format_expression(operand)
            if _PRECEDENCE[type(operand)] < _PRECEDENCE[Neg]:
                inner = f"({inner})"
            return f"-{inner}"
        case BinOp():
            prec = _PRECEDENCE[type(expr)]
            left = format_expression(expr.left)
            right = format_expression(expr.right)
            if _PRECEDENCE[type(expr.left)] < prec:
                left = f"({left})"
            if _PRECEDENCE[type(expr.right)] <= prec:
                right = f"({right})"
            return f"{left} {expr.symbol} {right}"
    raise TypeError(f"not an expression: {expr!r}")


def identifiers(expr: Expr) -> set[str]:
    """All identifier names used in the expression"""
    match expr:
        case Num():
            return set()
        case Var(name):
            return {name}
        case Neg(operand):
            return identifiers(operand)
        case BinOp():
            return identifiers(expr.left) | identifiers(expr.right)
    raise TypeError(f"not an expression: {expr!r}")


def evaluate(expr: Expr, env: Mapping[str, float]) -> float:
    """Evaluate for one scalar assignment; division by exact zero is an EvalError"""
    match expr:
        case Num(value):
            return float(value)
        case Var(name):
            if name not in env:
                raise UnboundIdentifier(name)
            return float(env[name])
        case Neg(operand):
            return -evaluate(operand, env)
        case Add(left, right):
            return evaluate(left, env) + evaluate(right, env)
        case Sub(left, right):
            return evaluate(left, env) - evaluate(right, env)
        case Mul(left, right):
            return evaluate(left, env) * evaluate(right, env)
        case Div(left, right):
            divisor = evaluate(right, env)
            if divisor == 0.0:
                raise EvalError(f"division by zero in {format_expression(expr)}")
            return evaluate(left, env) / divisor
    raise TypeError(f"not an expression: {expr!r}")


def evaluate_array(
    expr: Expr, env: Mapping[str, np.ndarray], size: int
) -> tuple[np.ndarray, np.ndarray]:
    """
    Evaluate element-wise over arrays of joint samples

    Returns:
        tuple: (values, valid) where valid is False wherever a divisor was exactly zero
    """
    match expr:
        case Num(value):
            return np.full(size, float(value)), np.ones(size, dtype=bool)
        case Var(name):
            if name not in env:
                raise UnboundIdentifier(name)
            return np.asarray(env[name], dtype=float), np.ones(size, dtype=bool)
        case Neg(operand):
            values, valid = evaluate_array(operand, env, size)
            return -values, valid
        case BinOp():
            left, left_ok = evaluate_array(expr.left, env, size)
            right, right_ok = evaluate_array(expr.right, env, size)
            valid = left_ok & right_ok
            match expr:
                case Add():
                    return left + right, valid
                case Sub():
                    return left - right, valid
                case Mul():
                    return left * right, valid
                case Div():
                    nonzero = right != 0.0
                    safe = np.where(nonzero, right, 1.0)
                    return left / safe, valid & nonzero
    raise TypeError(f"not an expression: {expr!r}")
