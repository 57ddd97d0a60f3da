"""Polynomial maps: parsing, symbolic Jacobians and evaluation.

A map is written as semicolon-separated component expressions, e.g.
``"x + x^2*y; y"``, over an explicit list of variable names.  Coefficients
are kept as exact :class:`fractions.Fraction` values; evaluation converts
them to floats only when the point is made of machine reals, so the same
tree evaluates exactly over ``Fraction`` or :class:`~sardkit.rcf.PuiseuxSeries`.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, Sequence, Union

import numpy as np


class ParseError(ValueError):
    """Malformed map text.  ``offset`` is the 0-based character position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class DimensionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# expression nodes


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Const:
    value: Fraction


@dataclass(frozen=True)
class Add:
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Sub:
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Mul:
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Neg:
    arg: "Expression"


@dataclass(frozen=True)
class Pow:
    base: "Expression"
    exp: int

    def __post_init__(self):
        if self.exp < 0:
            raise ValueError("negative exponent")


Expression = Union[Var, Const, Add, Sub, Mul, Neg, Pow]

ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def _is_const(e: Expression, value=None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


# shallow simplifying constructors


def add(a: Expression, b: Expression) -> Expression:
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    return Add(a, b)


def sub(a: Expression, b: Expression) -> Expression:
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    if _is_const(b, 0):
        return a
    if _is_const(a, 0):
        return neg(b)
    return Sub(a, b)


def mul(a: Expression, b: Expression) -> Expression:
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    if _is_const(a, 0) or _is_const(b, 0):
        return ZERO
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    return Mul(a, b)


def neg(a: Expression) -> Expression:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def power(a: Expression, k: int) -> Expression:
    if k == 0:
        return ONE
    if k == 1:
        return a
    if isinstance(a, Const):
        return Const(a.value ** k)
    return Pow(a, k)


def derivative(e: Expression, j: int) -> Expression:
    """Exact partial derivative of ``e`` with respect to variable ``j``."""
    if isinstance(e, Var):
        return ONE if e.index == j else ZERO
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Add):
        return add(derivative(e.left, j), derivative(e.right, j))
    if isinstance(e, Sub):
        return sub(derivative(e.left, j), derivative(e.right, j))
    if isinstance(e, Neg):
        return neg(derivative(e.arg, j))
    if isinstance(e, Mul):
        return add(mul(derivative(e.left, j), e.right),
                   mul(e.left, derivative(e.right, j)))
    if isinstance(e, Pow):
        db = derivative(e.base, j)
        if e.exp == 0 or _is_const(db, 0):
            return ZERO
        return mul(mul(Const(Fraction(e.exp)), power(e.base, e.exp - 1)), db)
    raise TypeError(f"not an expression node: {e!r}")


def substitute(e: Expression, repl: Sequence[Expression]) -> Expression:
    """Replace every ``Var(j)`` by ``repl[j]``."""
    if isinstance(e, Var):
        return repl[e.index]
    if isinstance(e, Const):
        return e
    if isinstance(e, Add):
        return add(substitute(e.left, repl), substitute(e.right, repl))
    if isinstance(e, Sub):
        return sub(substitute(e.left, repl), substitute(e.right, repl))
    if isinstance(e, Mul):
        return mul(substitute(e.left, repl), substitute(e.right, repl))
    if isinstance(e, Neg):
        return neg(substitute(e.arg, repl))
    if isinstance(e, Pow):
        return power(substitute(e.base, repl), e.exp)
    raise TypeError(f"not an expression node: {e!r}")


def max_var_index(e: Expression) -> int:
    if isinstance(e, Var):
        return e.index
    if isinstance(e, Const):
        return -1
    if isinstance(e, (Neg,)):
        return max_var_index(e.arg)
    if isinstance(e, Pow):
        return max_var_index(e.base)
    return max(max_var_index(e.left), max_var_index(e.right))


# ---------------------------------------------------------------------------
# evaluation


def _is_machine(x) -> bool:
    return isinstance(x, (float, np.floating, np.ndarray))


def evaluate(e: Expression, point: Sequence) -> object:
    """Evaluate ``e`` at ``point`` using the scalars' own ring operations.

    Constants become floats when the point holds machine reals and stay exact
    rationals otherwise (``Fraction``, ``int`` or ``PuiseuxSeries`` points).
    """
    machine = any(_is_machine(p) for p in point)

    def rec(node):
        if isinstance(node, Var):
            return point[node.index]
        if isinstance(node, Const):
            return float(node.value) if machine else node.value
        if isinstance(node, Add):
            return rec(node.left) + rec(node.right)
        if isinstance(node, Sub):
            return rec(node.left) - rec(node.right)
        if isinstance(node, Mul):
            return rec(node.left) * rec(node.right)
        if isinstance(node, Neg):
            return -rec(node.arg)
        if isinstance(node, Pow):
            base = rec(node.base)
            if node.exp == 0:
                return base * 0 + 1
            out = base
            for _ in range(node.exp - 1):
                out = out * base
            return out
        raise TypeError(f"not an expression node: {node!r}")

    return rec(e)


# ---------------------------------------------------------------------------
# printing


_PREC = {Add: 1, Sub: 1, Mul: 2, Neg: 3, Pow: 4}


def _fmt_const(c: Fraction, python: bool) -> str:
    if python:
        return repr(float(c))
    if c.denominator == 1:
        return str(c.numerator)
    return f"({c.numerator}/{c.denominator})"


def to_text(e: Expression, names: Sequence[str] | None = None, python: bool = False) -> str:
    """Render ``e`` in the input grammar (or as a Python expression).

    With ``python=True`` variables are printed as ``x[j]`` and constants as
    float literals; the result is meant for :func:`compile`.
    """

    def name(j):
        if python:
            return f"x[{j}]"
        return names[j] if names is not None else f"x{j + 1}"

    def rec(node, parent_prec):
        if isinstance(node, Var):
            return name(node.index)
        if isinstance(node, Const):
            s = _fmt_const(node.value, python)
            if node.value < 0:
                s = f"({s})"
            return s
        p = _PREC[type(node)]
        if isinstance(node, Add):
            s = f"{rec(node.left, 1)} + {rec(node.right, 2)}"
        elif isinstance(node, Sub):
            s = f"{rec(node.left, 1)} - {rec(node.right, 2)}"
        elif isinstance(node, Mul):
            s = f"{rec(node.left, 2)}*{rec(node.right, 3)}"
        elif isinstance(node, Neg):
            s = f"-{rec(node.arg, 3)}"
        else:
            op = "**" if python else "^"
            s = f"{rec(node.base, 5)}{op}{node.exp}"
        return f"({s})" if p < parent_prec else s

    return rec(e, 0)


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?|\.\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*^/();]))"
)


def _tokenize(text: str):
    toks = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        toks.append((kind, m.group(kind), start))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


class _Parser:
    # expr   := term (('+'|'-') term)*
    # term   := unary ('*' unary)*
    # unary  := '-' unary | '+' unary | power
    # power  := atom ('^' INT)?
    # atom   := NUM ('/' NUM)? | NAME | '(' expr ')'

    def __init__(self, text: str, vars: Sequence[str]):
        self.toks = _tokenize(text)
        self.i = 0
        self.index = {v: j for j, v in enumerate(vars)}

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, val, pos = self.take()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}", pos)

    def components(self):
        out = [self.expr()]
        while self.peek()[:2] == ("op", ";"):
            self.take()
            out.append(self.expr())
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {val!r}", pos)
        return out

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            _, op, _ = self.take()
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek()[:2] == ("op", "*"):
            self.take()
            node = Mul(node, self.unary())
        kind, val, pos = self.peek()
        if kind == "op" and val == "/":
            raise ParseError("division is only allowed inside a rational literal", pos)
        return node

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Neg(self.unary())
        if kind == "op" and val == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            kind, val, pos = self.take()
            if kind == "op" and val == "-":
                raise ParseError("negative exponent", pos)
            if kind != "num":
                raise ParseError("exponent must be a non-negative integer literal", pos)
            if not val.isdigit():
                raise ParseError("non-integer exponent", pos)
            if self.peek()[:2] == ("op", "/"):
                raise ParseError("non-integer exponent", self.peek()[2])
            return Pow(base, int(val))
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            value = Fraction(val)
            if self.peek()[:2] == ("op", "/"):
                self.take()
                k2, v2, p2 = self.take()
                if k2 != "num":
                    raise ParseError("division is only allowed inside a rational literal", p2)
                den = Fraction(v2)
                if den == 0:
                    raise ParseError("zero denominator", p2)
                value = value / den
            return Const(value)
        if kind == "name":
            if val not in self.index:
                raise ParseError(f"undeclared variable {val!r}", pos)
            return Var(self.index[val])
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        if kind == "end":
            raise ParseError("unexpected end of input", pos)
        raise ParseError(f"unexpected {val!r}", pos)


def parse_expression(text: str, vars: Sequence[str]) -> Expression:
    comps = _Parser(text, vars).components()
    if len(comps) != 1:
        raise ParseError("expected a single expression", 0)
    return comps[0]


# ---------------------------------------------------------------------------
# maps


@dataclass(frozen=True)
class JacobianMap:
    entries: tuple  # k rows of n expressions
    vars: tuple

    @property
    def k(self) -> int:
        return len(self.entries)

    @property
    def n(self) -> int:
        return len(self.vars)

    @cached_property
    def _compiled(self):
        rows = ", ".join("(" + ", ".join(to_text(e, python=True) for e in row) + ",)"
                         for row in self.entries)
        return _compile(f"({rows},)", "jacobian")

    def __call__(self, point):
        return eval_jacobian(self, point)


@dataclass(frozen=True)
class PolynomialMap:
    vars: tuple
    components: tuple

    def __post_init__(self):
        if not self.vars:
            raise ValueError("a map needs at least one variable")
        if not self.components:
            raise ValueError("a map needs at least one component")
        for c in self.components:
            if max_var_index(c) >= len(self.vars):
                raise ValueError("component references an undeclared variable")

    @property
    def n(self) -> int:
        return len(self.vars)

    @property
    def k(self) -> int:
        return len(self.components)

    def to_text(self) -> str:
        return "; ".join(to_text(c, self.vars) for c in self.components)

    def to_json(self) -> dict:
        return {"vars": list(self.vars),
                "components": [to_text(c, self.vars) for c in self.components]}

    @cached_property
    def jacobian(self) -> JacobianMap:
        return differentiate(self)

    @cached_property
    def _compiled(self):
        body = ", ".join(to_text(c, python=True) for c in self.components)
        return _compile(f"({body},)", "map")

    def __call__(self, point):
        return eval_map(self, point)

    def values(self, X: np.ndarray) -> np.ndarray:
        """Vectorised float evaluation; ``X`` has shape (m, n), result (m, k)."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n:
            raise DimensionError(f"expected points of length {self.n}")
        cols = self._compiled(X.T)
        return np.stack([np.broadcast_to(np.asarray(c, dtype=float), (X.shape[0],))
                         for c in cols], axis=1)

    def jacobians(self, X: np.ndarray) -> np.ndarray:
        """Vectorised float Jacobians; ``X`` has shape (m, n), result (m, k, n)."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n:
            raise DimensionError(f"expected points of length {self.n}")
        rows = self.jacobian._compiled(X.T)
        m = X.shape[0]
        return np.stack([np.stack([np.broadcast_to(np.asarray(e, dtype=float), (m,))
                                   for e in row], axis=-1) for row in rows], axis=1)

    def rescaled(self, t) -> "PolynomialMap":
        """The map ``x -> f(x / t)`` built by composition (``t`` converted exactly)."""
        s = Const(1 / Fraction(t))
        repl = [mul(s, Var(j)) for j in range(self.n)]
        return PolynomialMap(self.vars, tuple(substitute(c, repl) for c in self.components))


def _compile(src: str, label: str) -> Callable:
    # source comes from to_text(python=True) on our own trees only
    return eval(compile(f"lambda x: {src}", f"<sardkit {label}>", "eval"), {"__builtins__": {}})


def parse_map(text: str, vars: Sequence[str]) -> PolynomialMap:
    """Parse ``"e1; e2; ..."`` over ``vars`` into a :class:`PolynomialMap`."""
    vars = tuple(vars)
    if len(set(vars)) != len(vars):
        raise ValueError("duplicate variable names")
    for v in vars:
        if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", v):
            raise ValueError(f"invalid variable name {v!r}")
    comps = _Parser(text, vars).components()
    return PolynomialMap(vars, tuple(comps))


def map_from_json(obj: dict) -> PolynomialMap:
    comps = obj["components"]
    if isinstance(comps, str):
        comps = [comps]
    return parse_map("; ".join(comps), obj["vars"])


def differentiate(fmap: PolynomialMap) -> JacobianMap:
    entries = tuple(tuple(derivative(c, j) for j in range(fmap.n)) for c in fmap.components)
    return JacobianMap(entries, fmap.vars)


def _check_point(point, n):
    if len(point) != n:
        raise DimensionError(f"point has length {len(point)}, map expects {n}")


def eval_map(fmap: PolynomialMap, point: Sequence) -> list:
    _check_point(point, fmap.n)
    return [evaluate(c, point) for c in fmap.components]


def eval_jacobian(jac: JacobianMap, point: Sequence) -> list:
    _check_point(point, jac.n)
    return [[evaluate(e, point) for e in row] for row in jac.entries]
