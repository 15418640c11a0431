from __future__ import annotations

from fractions import Fraction

import pytest
from gmpy2 import mpq
from hypothesis import given, strategies as st

from heterochaos.exact import (
    BudgetExceeded,
    Box,
    DyadicInterval,
    HalfOpenInterval,
    TrinaryInterval,
    UNIT,
    Q,
    box_diameter_bound,
    check_bits,
    format_rational,
    interval,
    interval_intersect,
    parse_interval,
    parse_point,
    parse_rational,
)
from heterochaos.maps import preset

fractions = st.fractions(max_denominator=10 ** 12)
unit_rationals = st.fractions(min_value=0, max_value=1, max_denominator=10 ** 6)


@st.composite
def intervals(draw):
    a = draw(unit_rationals)
    b = draw(unit_rationals.filter(lambda v: v != a))
    lo, hi = min(a, b), max(a, b)
    return interval(mpq(lo), mpq(hi))


def _naive_intersect(a: HalfOpenInterval, b: HalfOpenInterval):
    lo, hi = max(a.lo, b.lo), min(a.hi, b.hi)
    return (lo, hi) if lo < hi else None


@given(fractions, fractions, fractions)
def test_arithmetic_matches_fraction_oracle(a, b, c):
    qa, qb, qc = mpq(a), mpq(b), mpq(c)
    assert (qa + qb) + qc == qa + (qb + qc)
    assert qa * (qb + qc) == qa * qb + qa * qc
    assert Fraction(int((qa * qb - qc).numerator), int((qa * qb - qc).denominator)) == a * b - c
    if c != 0:
        r = qa / qc
        assert Fraction(int(r.numerator), int(r.denominator)) == a / c


def test_lowest_terms_and_division_by_zero():
    q = Q(6, -4)
    assert (q.numerator, q.denominator) == (-3, 2)
    with pytest.raises(ZeroDivisionError):
        Q(1) / Q(0)


@given(fractions)
def test_format_parse_round_trip(a):
    q = mpq(a)
    text = format_rational(q)
    assert "/" in text
    assert parse_rational(text) == q


@pytest.mark.parametrize("bad", ["", "1/", "a/3", "1.5", "1/0", "2//3"])
def test_parse_rejects_malformed(bad):
    with pytest.raises(ValueError):
        parse_rational(bad)


def test_floats_are_refused():
    with pytest.raises(TypeError):
        Q(0.5)


def test_interval_membership_convention():
    half = interval(0, mpq(1, 2))
    assert 0 in half and mpq(1, 2) not in half
    top = interval(mpq(1, 2), 1)
    assert top.closed_hi and 1 in top
    assert str(half) == "[0/1,1/2)" and str(top) == "[1/2,1/1]"
    assert parse_interval(str(top)) == top
    with pytest.raises(ValueError):
        interval(mpq(1, 2), mpq(1, 2))


def test_intersect_examples():
    assert interval_intersect(interval(0, mpq(1, 2)), interval(mpq(1, 2), 1)) is None
    assert interval_intersect(interval(0, 1), interval(mpq(1, 3), mpq(2, 3))) == interval(mpq(1, 3), mpq(2, 3))
    assert interval_intersect(interval(mpq(1, 4), mpq(3, 4)), interval(mpq(1, 2), 1)) == interval(mpq(1, 2), mpq(3, 4))


@given(intervals(), intervals())
def test_intersect_matches_endpoint_oracle(a, b):
    got = interval_intersect(a, b)
    want = _naive_intersect(a, b)
    if want is None:
        assert got is None
    else:
        assert (got.lo, got.hi) == want
        assert got.closed_hi == (want[1] == 1)


@given(intervals(), intervals())
def test_intersect_commutative_and_idempotent(a, b):
    assert interval_intersect(a, b) == interval_intersect(b, a)
    assert interval_intersect(a, a) == a
    ab = interval_intersect(a, b)
    if ab is not None:
        assert interval_intersect(ab, b) == ab


def test_box_diameter_bound_examples():
    assert box_diameter_bound(Box.unit()) == 3
    b = Box.from_bounds([(0, mpq(1, 2)), (0, 1), (0, mpq(1, 4))])
    assert box_diameter_bound(b) == mpq(7, 4)
    with pytest.raises(ValueError):
        Box.from_bounds([(0, 1), (mpq(1, 3), mpq(1, 3)), (0, 1)])


def test_symbol_sets_classify():
    m = preset("hc3d")
    for s in "AD":
        d = m.branch(s).domain
        assert d.classify() == "pizzabox" and d.full_axes() == "YZ"
    for s in "BC":
        d = m.branch(s).domain
        assert d.classify() == "breadbox" and d.full_axes() == "Y"


def test_dyadic_and_trinary_intervals():
    d = DyadicInterval(3, 2)
    assert d.to_interval() == interval(mpq(3, 4), 1) and d.length == mpq(1, 4)
    assert DyadicInterval.from_interval(interval(mpq(1, 8), mpq(1, 4))) == DyadicInterval(1, 3)
    assert DyadicInterval.from_interval(interval(mpq(1, 3), mpq(2, 3))) is None
    assert DyadicInterval(0, 0).to_interval() == UNIT
    with pytest.raises(ValueError):
        DyadicInterval(4, 2)
    t = TrinaryInterval.containing(mpq(1, 2), 2)
    assert t == TrinaryInterval(4, 2)
    assert mpq(1, 2) in t.to_interval()
    assert TrinaryInterval.containing(1, 3).c == 26


def test_bit_guard(monkeypatch):
    big = mpq(1, 2 ** 5000)
    with pytest.raises(BudgetExceeded):
        check_bits([big])
    monkeypatch.setenv("HETEROCHAOS_MAX_BITS", "10000")
    check_bits([big])
    with pytest.raises(BudgetExceeded):
        check_bits([mpq(1, 2 ** 20)], limit=10)


def test_parse_point():
    assert parse_point("(1/4, 3/4,1/3)") == (mpq(1, 4), mpq(3, 4), mpq(1, 3))
    with pytest.raises(ValueError):
        parse_point("")
