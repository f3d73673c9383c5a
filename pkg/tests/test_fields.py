from fractions import Fraction

import gmpy2
import mpmath
import pytest
from hypothesis import given, strategies as st

from gnnseplab.fields import RATIONAL, Interval, IntervalField, parse_field

mpmath.mp.prec = 2000

rationals = st.fractions(min_value=-30, max_value=30, max_denominator=50)
precisions = st.sampled_from([16, 53, 64, 128, 300])


def _mp(x):
    num, den = x.as_integer_ratio()
    return mpmath.mpf(num) / den


def encloses(iv: Interval, true) -> bool:
    return _mp(iv.lo) <= true <= _mp(iv.hi)


def _mp_sigmoid(x):
    return 1 / (1 + mpmath.exp(-x))


REFERENCE = {
    "exp": mpmath.exp,
    "sinh": mpmath.sinh,
    "cosh": mpmath.cosh,
    "tanh": mpmath.tanh,
    "sigmoid": _mp_sigmoid,
}


@given(rationals, precisions)
def test_from_rational_encloses(q, prec):
    iv = Interval.from_rational(q, prec)
    assert iv.contains(q)
    assert encloses(iv, mpmath.mpf(q.numerator) / q.denominator)


@given(rationals, rationals, precisions)
def test_arithmetic_encloses_exact_result(a, b, prec):
    A, B = Interval.from_rational(a, prec), Interval.from_rational(b, prec)
    assert (A + B).contains(a + b)
    assert (A - B).contains(a - b)
    assert (A * B).contains(a * b)
    assert (A * b).contains(a * b)
    assert (3 * A).contains(3 * a)
    assert (-A).contains(-a)
    assert (A**3).contains(a**3)
    assert (A**2).contains(a**2)


@pytest.mark.parametrize("name", sorted(REFERENCE))
@given(x=rationals, prec=precisions)
def test_transcendental_point_enclosure(name, x, prec):
    iv = getattr(Interval.from_rational(x, prec), name)()
    assert encloses(iv, REFERENCE[name](mpmath.mpf(x.numerator) / x.denominator))


@pytest.mark.parametrize("name", sorted(REFERENCE))
@given(a=rationals, b=rationals)
def test_transcendental_range_enclosure(name, a, b):
    lo, hi = min(a, b), max(a, b)
    iv = Interval(Interval.from_rational(lo, 64).lo, Interval.from_rational(hi, 64).hi, 64)
    out = getattr(iv, name)()
    f = REFERENCE[name]
    for x in (lo, hi, (lo + hi) / 2):
        assert encloses(out, f(mpmath.mpf(x.numerator) / x.denominator))
    if name == "cosh" and lo < 0 < hi:
        assert out.lo == 1


@pytest.mark.parametrize("prec", [8, 53, 64, 200, 512])
def test_sigmoid_of_zero(prec):
    iv = IntervalField(prec).const(0).sigmoid()
    assert iv.contains(Fraction(1, 2))
    lo, hi = iv.endpoints_as_fractions()
    assert hi - lo <= Fraction(2) ** (1 - prec)


@pytest.mark.parametrize("name", sorted(REFERENCE))
@given(x=st.fractions(min_value=-10, max_value=10, max_denominator=9))
def test_doubling_precision_keeps_overlap_and_tightens(name, x):
    lo_p = getattr(Interval.from_rational(x, 64), name)()
    hi_p = getattr(Interval.from_rational(x, 128), name)()
    assert lo_p.intersects(hi_p)
    assert hi_p.width <= lo_p.width


def test_overflow_stays_sound():
    iv = Interval.from_rational(10**12, 64).exp()
    assert gmpy2.is_infinite(iv.hi)
    assert not gmpy2.is_infinite(iv.lo) and iv.lo > 0


def test_hull_and_disjoint():
    a = Interval.from_rational(1, 64)
    b = Interval.from_rational(2, 64)
    assert a.disjoint(b)
    h = a.hull(b)
    assert h.contains(a) and h.contains(b) and h.contains(Fraction(3, 2))


def test_parse_field():
    assert parse_field("rational") is RATIONAL
    assert parse_field("interval:128") == IntervalField(128)
    for bad in ("float", "interval:x", "interval:1"):
        with pytest.raises(ValueError):
            parse_field(bad)


def test_empty_interval_rejected():
    with pytest.raises(ValueError):
        Interval(gmpy2.mpfr(2), gmpy2.mpfr(1), 53)
