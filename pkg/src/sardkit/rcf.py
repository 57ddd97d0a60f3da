"""Truncated Puiseux series with rational coefficients.

Elements model germs at ``0+`` of one-variable semialgebraic functions: a
finite sum ``c_1 T^q_1 + c_2 T^q_2 + ...`` with increasing rational
exponents, known only below a truncation order.  The ordering makes ``T`` a
positive infinitesimal: a series is positive iff its leading coefficient is.

>>> T = PuiseuxSeries.T()
>>> (1 - T) * (1 + T + T**2 + T**3)
PuiseuxSeries([(0, 1), (4, -1)], trunc_order=16)
>>> ((1 - T) * (1 + T + T**2 + T**3)).truncate(4)
PuiseuxSeries([(0, 1)], trunc_order=4)
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable

DEFAULT_TRUNC = Fraction(16)
INF = math.inf


def _q(x) -> Fraction:
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError("non-finite value")
    return Fraction(x)


class PuiseuxSeries:
    """Immutable truncated Laurent-Puiseux series over the rationals."""

    __slots__ = ("terms", "trunc_order")

    def __init__(self, terms: Iterable = (), trunc_order=DEFAULT_TRUNC):
        trunc = _q(trunc_order)
        acc: dict[Fraction, Fraction] = {}
        for q, c in terms:
            q, c = _q(q), _q(c)
            if q >= trunc:
                continue
            acc[q] = acc.get(q, Fraction(0)) + c
        object.__setattr__(self, "terms",
                           tuple((q, acc[q]) for q in sorted(acc) if acc[q] != 0))
        object.__setattr__(self, "trunc_order", trunc)

    def __setattr__(self, name, value):
        raise AttributeError("PuiseuxSeries is immutable")

    # construction helpers

    @classmethod
    def T(cls, exponent=1, trunc_order=DEFAULT_TRUNC) -> "PuiseuxSeries":
        return cls([(exponent, 1)], trunc_order)

    @classmethod
    def const(cls, c, trunc_order=DEFAULT_TRUNC) -> "PuiseuxSeries":
        return cls([(0, c)], trunc_order)

    def _coerce(self, other) -> "PuiseuxSeries | None":
        if isinstance(other, PuiseuxSeries):
            return other
        if isinstance(other, (int, Rational)):
            return PuiseuxSeries.const(other, self.trunc_order)
        return None

    def truncate(self, order) -> "PuiseuxSeries":
        return PuiseuxSeries(self.terms, min(_q(order), self.trunc_order))

    # basic queries

    def valuation(self):
        """Lowest exponent, or ``math.inf`` for the zero series."""
        return self.terms[0][0] if self.terms else INF

    def leading_coefficient(self) -> Fraction:
        return self.terms[0][1] if self.terms else Fraction(0)

    def is_zero(self) -> bool:
        return not self.terms

    def sign(self) -> int:
        if not self.terms:
            return 0
        return 1 if self.terms[0][1] > 0 else -1

    # ring operations

    def __neg__(self):
        return PuiseuxSeries([(q, -c) for q, c in self.terms], self.trunc_order)

    def __pos__(self):
        return self

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return PuiseuxSeries(self.terms + other.terms,
                             min(self.trunc_order, other.trunc_order))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        ta, tb = self.trunc_order, other.trunc_order
        va, vb = self.valuation(), other.valuation()
        trunc = min(ta, tb)
        if vb != INF:
            trunc = min(trunc, ta + vb)
        if va != INF:
            trunc = min(trunc, tb + va)
        terms = [(qa + qb, ca * cb) for qa, ca in self.terms for qb, cb in other.terms]
        return PuiseuxSeries(terms, trunc)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inv() ** (-k)
        out = PuiseuxSeries.const(1, self.trunc_order)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def inv(self) -> "PuiseuxSeries":
        """Multiplicative inverse by geometric expansion after factoring the leading term.

        The result is known up to order ``trunc_order - 2*valuation``.
        """
        if not self.terms:
            raise ZeroDivisionError("inverse of the zero series")
        v, c = self.terms[0]
        trunc = self.trunc_order - 2 * v
        # self = c T^v (1 + u) with val(u) > 0
        rel = self.trunc_order - v
        u = PuiseuxSeries([(q - v, ci / c) for q, ci in self.terms[1:]], rel)
        geo = PuiseuxSeries.const(1, rel)
        if u.terms:
            step = u.valuation()
            term = PuiseuxSeries.const(1, rel)
            for _ in range(int(math.ceil(rel / step)) + 1):
                term = term * (-u)
                if term.is_zero():
                    break
                geo = geo + term
        return PuiseuxSeries([(q - v, ci / c) for q, ci in geo.terms], trunc)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self * other.inv()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other * self.inv()

    # ordering

    def compare_detail(self, other) -> tuple[int, bool]:
        """``(sign of self - other, truncated)``.

        ``truncated`` is set when the difference vanishes only because terms
        were discarded, i.e. the two term lists differ but compare equal.
        """
        other = self._coerce(other)
        d = self - other
        s = d.sign()
        truncated = s == 0 and self.terms != other.terms
        return s, truncated

    def compare(self, other) -> int:
        return self.compare_detail(other)[0]

    def __eq__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self.compare(other) == 0

    def __lt__(self, other):
        if self._coerce(other) is None:
            return NotImplemented
        return self.compare(other) < 0

    def __le__(self, other):
        if self._coerce(other) is None:
            return NotImplemented
        return self.compare(other) <= 0

    def __gt__(self, other):
        if self._coerce(other) is None:
            return NotImplemented
        return self.compare(other) > 0

    def __ge__(self, other):
        if self._coerce(other) is None:
            return NotImplemented
        return self.compare(other) >= 0

    def __hash__(self):
        return hash(self.terms)

    # infinitesimals and numerics

    def is_infinitesimal(self) -> bool:
        return not self.terms or self.terms[0][0] > 0

    def evaluate_at(self, t: float) -> float:
        """Numeric value of the germ at ``t > 0``."""
        if not t > 0:
            raise ValueError("t must be positive")
        total = 0.0
        for q, c in self.terms:
            try:
                val = float(c) * t ** float(q)
            except OverflowError as exc:
                raise OverflowError(f"T^{q} overflows at t={t}") from exc
            if not math.isfinite(val):
                raise OverflowError(f"T^{q} overflows at t={t}")
            total += val
        return total

    def to_json(self) -> dict:
        v = self.valuation()
        return {"terms": [[_fmt(q), _fmt(c)] for q, c in self.terms],
                "trunc_order": _fmt(self.trunc_order),
                "valuation": "inf" if v == INF else _fmt(v)}

    def __repr__(self):
        terms = ", ".join(f"({_fmt(q)}, {_fmt(c)})" for q, c in self.terms)
        return f"PuiseuxSeries([{terms}], trunc_order={_fmt(self.trunc_order)})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for q, c in self.terms:
            mono = "" if q == 0 else ("T" if q == 1 else f"T^{_fmt_exp(q)}")
            coef = str(c) if (mono == "" or abs(c) != 1) else ("-" if c < 0 else "")
            parts.append(f"{coef}{'*' if mono and coef not in ('', '-') else ''}{mono}")
        return " + ".join(parts).replace("+ -", "- ")


def _fmt_exp(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 and q > 0 else f"({q})"


def _fmt(x: Fraction):
    x = Fraction(x)
    return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def valuation(a: PuiseuxSeries):
    return a.valuation()


def is_infinitesimal(a: PuiseuxSeries) -> bool:
    return a.is_infinitesimal()


def compare(a: PuiseuxSeries, b: PuiseuxSeries) -> int:
    return a.compare(b)


def evaluate_at(a: PuiseuxSeries, t: float) -> float:
    return a.evaluate_at(t)


@dataclass(frozen=True)
class ConvexSubgroup:
    """Convex subgroup of the Puiseux field cut out by a valuation bound.

    ``val_gt`` with threshold 2 is the group of series bounded by ``N T^2``
    for every positive ``N``; ``val_ge`` keeps the series bounded by some ``N T^2``.
    """

    threshold: Fraction
    mode: str = "val_gt"

    def __post_init__(self):
        if self.mode not in ("val_gt", "val_ge"):
            raise ValueError(f"unknown mode {self.mode!r}")
        object.__setattr__(self, "threshold", Fraction(self.threshold))

    def __contains__(self, a: PuiseuxSeries) -> bool:
        v = a.valuation()
        if v == INF:
            return True
        return v > self.threshold if self.mode == "val_gt" else v >= self.threshold


def in_subgroup(a: PuiseuxSeries, v: ConvexSubgroup) -> bool:
    return a in v


INFINITESIMALS = ConvexSubgroup(Fraction(0), "val_gt")


# JSON expression interface used by the ``puiseux`` CLI command:
#   {"op": "mul", "args": [[[1, 1]], {"op": "inv", "args": [[[0, 1], [1, -1]]]}]}
# leaves are term lists [[q, c], ...]; q and c may be ints or "p/q" strings.

_BINARY = {"add": lambda a, b: a + b, "sub": lambda a, b: a - b, "mul": lambda a, b: a * b,
           "div": lambda a, b: a / b}


def from_json_expr(obj, trunc_order=DEFAULT_TRUNC) -> PuiseuxSeries:
    if isinstance(obj, list):
        return PuiseuxSeries([(Fraction(str(q)), Fraction(str(c))) for q, c in obj], trunc_order)
    if not isinstance(obj, dict) or "op" not in obj:
        raise ValueError("expected a term list or an {'op': ..., 'args': [...]} object")
    op = obj["op"]
    trunc = Fraction(str(obj.get("trunc_order", trunc_order)))
    args = [from_json_expr(a, trunc) for a in obj.get("args", [])]
    if op in _BINARY:
        if len(args) < 2:
            raise ValueError(f"{op} needs at least two arguments")
        out = args[0]
        for a in args[1:]:
            out = _BINARY[op](out, a)
        return out
    if len(args) != 1:
        raise ValueError(f"{op} takes exactly one argument")
    (a,) = args
    if op == "neg":
        return -a
    if op == "inv":
        return a.inv()
    if op == "abs":
        return abs(a)
    if op == "pow":
        return a ** int(obj["k"])
    raise ValueError(f"unknown op {op!r}")
