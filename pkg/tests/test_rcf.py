from fractions import Fraction

import math
import pytest
from hypothesis import given, settings, strategies as st

from sardkit.rcf import (
    ConvexSubgroup, INFINITESIMALS, PuiseuxSeries as P, compare, evaluate_at, from_json_expr,
    in_subgroup, is_infinitesimal, valuation,
)

T = P.T()


def test_arithmetic_examples():
    half = P.T(Fraction(1, 2))
    assert half * half == T
    assert ((1 + T) + (-1)).terms == T.terms
    lhs = (1 - P.T(trunc_order=4)) * (1 + T + T**2 + T**3)
    assert lhs.terms == ((0, 1),)
    assert lhs.trunc_order == 4


def test_mul_truncation_rule():
    a = P([(1, 1)], 5)
    b = P([(0, 1), (2, 3)], 4)
    # min(5 + 0, 4 + 1) capped at min(5, 4)
    assert (a * b).trunc_order == 4
    c = P([(-2, 1)], 6)
    assert (c * P.const(1, 6)).trunc_order == 4
    assert (c * P([], 6)).trunc_order == 4


def test_inverse_examples():
    inv = (1 - P.T(trunc_order=4)).inv()
    assert inv.terms == ((0, 1), (1, 1), (2, 1), (3, 1))
    assert T.inv().terms == ((-1, 1),)
    with pytest.raises(ZeroDivisionError):
        P().inv()


def test_compare_examples():
    assert compare(T, 2 * T**2) == 1
    assert compare(1 + T, P.const(1)) == 1
    a = 3 * T - T**2
    assert compare(a, a) == 0


def test_truncation_equality_is_flagged():
    a = P([(0, 1), (5, 1)], 16)
    b = P([(0, 1)], 4)
    assert a.compare_detail(b) == (0, True)
    assert a.compare_detail(a) == (0, False)


def test_valuation_examples():
    assert valuation(3 * T - T**2) == 1
    assert valuation(P()) == math.inf
    assert valuation(P.T(Fraction(-1, 2)) + 1) == Fraction(-1, 2)


def test_infinitesimal_examples():
    assert is_infinitesimal(3 * T - T**2)
    assert not is_infinitesimal(1 + T)
    assert is_infinitesimal(P())
    assert (3 * T) in INFINITESIMALS


def test_subgroup_examples():
    v = ConvexSubgroup(2, "val_gt")
    assert in_subgroup(T**3, v)
    assert not in_subgroup(T**2, v)
    assert in_subgroup(P(), v)
    assert in_subgroup(T**2, ConvexSubgroup(2, "val_ge"))


def test_evaluate_at_examples():
    assert evaluate_at(T + T**2, 0.1) == pytest.approx(0.11, rel=1e-15)
    assert evaluate_at(P.const(1), 0.37) == 1.0
    assert evaluate_at(T.inv(), 0.01) == pytest.approx(100.0, rel=1e-15)
    with pytest.raises(OverflowError):
        evaluate_at(P.T(-400), 1e-3)
    with pytest.raises(ValueError):
        evaluate_at(T, 0.0)


def test_json_expression():
    s = from_json_expr({"op": "mul", "args": [[[1, 1]], {"op": "inv", "args": [[[0, 1], [1, -1]]]}]},
                       trunc_order=5)
    assert s.terms == tuple((Fraction(q), Fraction(1)) for q in (1, 2, 3, 4))
    with pytest.raises(ValueError):
        from_json_expr({"op": "frobnicate", "args": [[[0, 1]]]})


# -- properties -------------------------------------------------------------

exponents = st.fractions(min_value=-2, max_value=4, max_denominator=4)
coefs = st.fractions(min_value=-5, max_value=5, max_denominator=6).filter(lambda c: c != 0)
series = st.lists(st.tuples(exponents, coefs), min_size=0, max_size=4).map(lambda t: P(t, 8))


@settings(max_examples=500, deadline=None)
@given(series, series, series)
def test_ordered_field_axioms(a, b, c):
    if a < b and b < c:
        assert a < c
    if a < b:
        assert a + c < b + c
    if a < b and c > 0:
        # compare at the precision shared by both products
        ac, bc = a * c, b * c
        shared = min(ac.trunc_order, bc.trunc_order)
        d = (bc - ac).truncate(shared)
        assert d.sign() >= 0
        if (b - a).valuation() + c.valuation() < shared:
            assert d.sign() > 0


@settings(max_examples=300, deadline=None)
@given(series)
def test_inverse_round_trip(a):
    if a.is_zero():
        return
    prod = a * a.inv()
    bound = a.trunc_order - 2 * abs(a.valuation())
    diff = prod - 1
    assert all(q >= bound for q, _ in diff.terms)


@settings(max_examples=300, deadline=None)
@given(series)
def test_infinitesimal_matches_rational_comparisons(a):
    small = [Fraction(1), Fraction(1, 2), Fraction(1, 10), Fraction(1, 100)]
    below_all = all(compare(abs(a), P.const(q, a.trunc_order)) < 0 for q in small)
    assert is_infinitesimal(a) == below_all


@settings(max_examples=300, deadline=None)
@given(series, series)
def test_evaluate_at_respects_order(a, b):
    s, _ = a.compare_detail(b)
    if s == 0:
        return
    gap = b - a if s < 0 else a - b
    lead = abs(float(gap.leading_coefficient()))
    # the leading term dominates once t is below a bound set by the gap's terms
    for t in (1e-2, 1e-4, 1e-6):
        tail = sum(abs(float(c)) * t ** float(q - gap.valuation()) for q, c in gap.terms[1:])
        if tail >= lead / 2:
            continue
        lo, hi = (a, b) if s < 0 else (b, a)
        size = max(abs(evaluate_at(lo, t)), abs(evaluate_at(hi, t)))
        if lead * t ** float(gap.valuation()) <= 1e-12 * size:
            continue  # gap below double resolution
        assert evaluate_at(lo, t) < evaluate_at(hi, t)


def test_subgroup_convexity_on_samples():
    v = ConvexSubgroup(2, "val_gt")
    members = [T**3, -2 * T**5 + T**3, P(), P.T(Fraction(5, 2))]
    for a in members:
        for b in members:
            for t in (Fraction(0), Fraction(1, 3), Fraction(1, 2), Fraction(1)):
                assert in_subgroup(t * a + (1 - t) * b, v)
