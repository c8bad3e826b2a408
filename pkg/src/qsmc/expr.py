"""Small expression language for plant, disturbance and reference definitions.

Grammar (whitespace insensitive)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := base ('^' factor)?                 # right associative
    base   := number | name | call | '(' expr ')' | '-' base
    call   := func '(' arg (',' arg)* ')'
    cond   := expr ('<' | '<=' | '>' | '>=') expr   # only as pw() conditions

Names are ``t``, ``pi`` and the state variables ``x1 .. xn``.  ``pw(c1, e1,
..., ck, ek, default)`` returns the branch of the first condition that holds.

Expressions compile to plain Python closures ``fn(t, x) -> float``; see
:func:`compile_expr`.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence, Union

__all__ = [
    "ExprError", "ExprSyntaxError", "ExprNameError", "ExprArityError", "ExprDomainError",
    "Num", "Const", "Var", "Neg", "BinOp", "Call", "Cond", "Piecewise", "Expr",
    "EvalContext", "parse", "evaluate", "compile_expr", "pretty", "max_state_index",
]


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


class ExprNameError(ExprSyntaxError):
    pass


class ExprArityError(ExprSyntaxError):
    pass


class ExprDomainError(ExprError):
    def __init__(self, message: str, subexpr: str):
        super().__init__(f"{message} in {subexpr}")
        self.subexpr = subexpr


# ---------------------------------------------------------------- AST nodes

@dataclass(frozen=True)
class Num:
    value: float

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value >= 0):
            raise ValueError(f"literal must be finite and non-negative, got {self.value}")


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Var:
    name: str  # "t" or "x<i>"
    index: int = 0  # 0 for t, 1-based for states


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


@dataclass(frozen=True)
class Cond:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Piecewise:
    branches: tuple  # ((Cond, Expr), ...)
    default: "Expr"


Expr = Union[Num, Const, Var, Neg, BinOp, Call, Piecewise]

CONSTANTS = {"pi": math.pi}
UNARY = ("sin", "cos", "tan", "exp", "ln", "sqrt", "abs", "sign")
BINARY = ("min", "max")
RELOPS = ("<=", ">=", "<", ">")


class EvalContext(NamedTuple):
    t: float
    x: Sequence[float] = ()


# ---------------------------------------------------------------- tokenizer

class _Tok(NamedTuple):
    kind: str  # num, name, op, end
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><=|>=|[-+*/^(),<>])
    """,
    re.VERBOSE,
)


def _tokenize(source: str) -> list[_Tok]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line, line_start = line + 1, m.end()
        elif kind != "ws":
            tokens.append(_Tok(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(_Tok("end", "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------------------------- parser

class _Parser:
    def __init__(self, source: str, order: int):
        self.tokens = _tokenize(source)
        self.pos = 0
        self.order = order

    @property
    def tok(self) -> _Tok:
        return self.tokens[self.pos]

    def advance(self) -> _Tok:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message, tok=None, cls=ExprSyntaxError):
        tok = tok or self.tok
        return cls(message, tok.line, tok.col)

    def expect(self, text):
        if self.tok.text != text or self.tok.kind == "end":
            found = "end of input" if self.tok.kind == "end" else repr(self.tok.text)
            raise self.error(f"expected {text!r}, found {found}")
        return self.advance()

    def parse(self) -> Expr:
        node = self.expr()
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self.tok.text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            op = self.advance().text
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        node = self.base()
        if self.tok.text == "^":
            self.advance()
            node = BinOp("^", node, self.factor())
        return node

    def base(self):
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.text == "-" and tok.kind == "op":
            self.advance()
            return Neg(self.base())
        if tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "name":
            return self.name()
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise self.error(f"expected a value, found {found}")

    def name(self):
        tok = self.advance()
        name = tok.text
        is_call = self.tok.text == "("
        if name in UNARY or name in BINARY or name == "pw":
            if not is_call:
                raise self.error(f"function {name!r} used without arguments", tok)
            return self.call(tok)
        if is_call:
            raise self.error(f"{name!r} is not a function", tok, ExprNameError)
        if name in CONSTANTS:
            return Const(name)
        if name == "t":
            return Var("t", 0)
        m = re.fullmatch(r"x([1-9][0-9]*)", name)
        if m:
            index = int(m.group(1))
            if index > self.order:
                raise self.error(f"variable {name} out of range for order {self.order}", tok, ExprNameError)
            return Var(name, index)
        raise self.error(f"unknown identifier {name!r}", tok, ExprNameError)

    def call(self, name_tok):
        name = name_tok.text
        self.expect("(")
        args = [self.arg(allow_cond=name == "pw")]
        while self.tok.text == ",":
            self.advance()
            args.append(self.arg(allow_cond=name == "pw"))
        self.expect(")")
        if name == "pw":
            return self.piecewise(name_tok, args)
        want = 1 if name in UNARY else 2
        if len(args) != want:
            raise self.error(f"{name}() takes {want} argument(s), got {len(args)}", name_tok, ExprArityError)
        return Call(name, tuple(args))

    def arg(self, allow_cond):
        node = self.expr()
        if self.tok.text in RELOPS:
            if not allow_cond:
                raise self.error("comparisons are only allowed as pw() conditions")
            op = self.advance().text
            return Cond(op, node, self.expr())
        return node

    def piecewise(self, name_tok, args):
        if len(args) < 3 or len(args) % 2 == 0:
            raise self.error(
                f"pw() takes condition/value pairs plus a default (odd count >= 3), got {len(args)}",
                name_tok, ExprArityError,
            )
        for k, a in enumerate(args):
            wants_cond = k % 2 == 0 and k < len(args) - 1
            if wants_cond != isinstance(a, Cond):
                what = "a condition" if wants_cond else "a value"
                raise self.error(f"pw() argument {k + 1} must be {what}", name_tok)
        branches = tuple((args[k], args[k + 1]) for k in range(0, len(args) - 1, 2))
        return Piecewise(branches, args[-1])


def parse(source: str, order: int = 0) -> Expr:
    """Parse ``source`` into an AST; state variables above ``x<order>`` are rejected."""
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", 1, 1)
    return _Parser(source, order).parse()


# ---------------------------------------------------------------- printing

def _fmt_num(v: float) -> str:
    if v.is_integer() and v < 1e16:
        return str(int(v))
    return repr(v)


def pretty(e) -> str:
    """Canonical fully parenthesized text that parses back to the same AST."""
    if isinstance(e, Num):
        return _fmt_num(e.value)
    if isinstance(e, (Const, Var)):
        return e.name
    if isinstance(e, Neg):
        return f"(-{pretty(e.operand)})"
    if isinstance(e, BinOp):
        return f"({pretty(e.left)} {e.op} {pretty(e.right)})"
    if isinstance(e, Cond):
        return f"{pretty(e.left)} {e.op} {pretty(e.right)}"
    if isinstance(e, Call):
        return f"{e.func}({', '.join(pretty(a) for a in e.args)})"
    if isinstance(e, Piecewise):
        parts = [f"{pretty(c)}, {pretty(v)}" for c, v in e.branches]
        return f"pw({', '.join(parts)}, {pretty(e.default)})"
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------- evaluation

def _sign(v):
    return 1.0 if v > 0 else (-1.0 if v < 0 else 0.0)


def _checked(fn, node):
    def run(*args):
        try:
            out = fn(*args)
        except (ZeroDivisionError, OverflowError, ValueError) as exc:
            raise ExprDomainError(str(exc), pretty(node)) from None
        if isinstance(out, complex):
            raise ExprDomainError("complex result", pretty(node))
        return out
    return run


def _div(a, b):
    if b == 0:
        raise ZeroDivisionError("division by zero")
    return a / b


def _ln(a):
    if a <= 0:
        raise ValueError("ln of non-positive argument")
    return math.log(a)


def _sqrt(a):
    if a < 0:
        raise ValueError("sqrt of negative argument")
    return math.sqrt(a)


_UNARY_FUNCS = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan, "exp": math.exp,
    "ln": _ln, "sqrt": _sqrt, "abs": abs, "sign": _sign,
}
_BINARY_FUNCS = {"min": min, "max": max}
_BINOPS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _div,
    "^": lambda a, b: a ** b,
}
_RELOPS = {
    "<": lambda a, b: a < b, "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b, ">=": lambda a, b: a >= b,
}


def compile_expr(e) -> Callable[[float, Sequence[float]], float]:
    """Turn an AST into a closure ``fn(t, x)``; evaluation errors raise ExprDomainError."""
    if isinstance(e, Num):
        v = float(e.value)
        return lambda t, x: v
    if isinstance(e, Const):
        v = CONSTANTS[e.name]
        return lambda t, x: v
    if isinstance(e, Var):
        if e.index == 0:
            return lambda t, x: t
        i = e.index - 1
        return lambda t, x: x[i]
    if isinstance(e, Neg):
        inner = compile_expr(e.operand)
        return lambda t, x: -inner(t, x)
    if isinstance(e, BinOp):
        op = _checked(_BINOPS[e.op], e)
        left, right = compile_expr(e.left), compile_expr(e.right)
        return lambda t, x: op(left(t, x), right(t, x))
    if isinstance(e, Call):
        if e.func in _UNARY_FUNCS:
            fn = _checked(_UNARY_FUNCS[e.func], e)
            arg = compile_expr(e.args[0])
            return lambda t, x: fn(arg(t, x))
        fn = _BINARY_FUNCS[e.func]
        a, b = compile_expr(e.args[0]), compile_expr(e.args[1])
        return lambda t, x: fn(a(t, x), b(t, x))
    if isinstance(e, Piecewise):
        branches = [
            (_RELOPS[c.op], compile_expr(c.left), compile_expr(c.right), compile_expr(v))
            for c, v in e.branches
        ]
        default = compile_expr(e.default)

        def piecewise(t, x):
            for rel, lhs, rhs, value in branches:
                if rel(lhs(t, x), rhs(t, x)):
                    return value(t, x)
            return default(t, x)
        return piecewise
    raise TypeError(f"not an expression node: {e!r}")


def max_state_index(e) -> int:
    """Largest state subscript referenced by ``e`` (0 if none)."""
    if isinstance(e, Var):
        return e.index
    if isinstance(e, (Neg,)):
        return max_state_index(e.operand)
    if isinstance(e, (BinOp, Cond)):
        return max(max_state_index(e.left), max_state_index(e.right))
    if isinstance(e, Call):
        return max(max_state_index(a) for a in e.args)
    if isinstance(e, Piecewise):
        parts = [max_state_index(e.default)]
        for c, v in e.branches:
            parts += [max_state_index(c), max_state_index(v)]
        return max(parts)
    return 0


def evaluate(e, ctx: EvalContext) -> float:
    needed = max_state_index(e)
    if needed > len(ctx.x):
        raise ExprError(f"expression references x{needed} but the context has {len(ctx.x)} states")
    return float(compile_expr(e)(ctx.t, ctx.x))
