"""Scalar fields for network evaluation: exact rationals and outward-rounded intervals.

Interval endpoints are MPFR numbers.  Every lower endpoint is computed with
rounding toward -inf and every upper endpoint toward +inf; MPFR's correct
rounding of ``exp``/``sinh``/``cosh``/``tanh`` then makes each enclosure
rigorous.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from numbers import Rational

import gmpy2
from gmpy2 import mpfr, mpq


class UnsupportedFieldError(TypeError):
    """An operation is not available in the requested scalar field."""


@lru_cache(maxsize=None)
def _contexts(prec: int):
    kw = dict(precision=prec, emax=gmpy2.get_emax_max(), emin=gmpy2.get_emin_min())
    return (
        gmpy2.context(round=gmpy2.RoundDown, **kw),
        gmpy2.context(round=gmpy2.RoundUp, **kw),
    )


_INF = mpfr("inf")


def _neg(x):
    # plain unary minus rounds to the global context precision
    return _contexts(x.precision)[0].minus(x)


def _nan_to(x, fallback):
    return fallback if gmpy2.is_nan(x) else x


class Interval:
    """Closed interval ``[lo, hi]`` of reals at a fixed working precision."""

    __slots__ = ("lo", "hi", "prec")

    def __init__(self, lo, hi, prec: int) -> None:
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi
        self.prec = prec

    @classmethod
    def from_rational(cls, q, prec: int) -> Interval:
        q = mpq(q.numerator, q.denominator) if isinstance(q, Rational) else mpq(q)
        dn, up = _contexts(prec)
        return cls(mpfr(q, prec, dn), mpfr(q, prec, up), prec)

    def _coerce(self, other) -> Interval:
        if isinstance(other, Interval):
            return other
        if isinstance(other, (int, Fraction, Rational)):
            return Interval.from_rational(other, self.prec)
        return NotImplemented

    def _ctx(self, other: Interval):
        return _contexts(max(self.prec, other.prec)), max(self.prec, other.prec)

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        (dn, up), p = self._ctx(other)
        return Interval(dn.add(self.lo, other.lo), up.add(self.hi, other.hi), p)

    __radd__ = __add__

    def __neg__(self) -> Interval:
        return Interval(_neg(self.hi), _neg(self.lo), self.prec)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        (dn, up), p = self._ctx(other)
        return Interval(dn.sub(self.lo, other.hi), up.sub(self.hi, other.lo), p)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        (dn, up), p = self._ctx(other)
        pairs = [(a, b) for a in (self.lo, self.hi) for b in (other.lo, other.hi)]
        # 0 * inf yields nan; widen to the whole line in that case
        lo = min(_nan_to(dn.mul(a, b), -_INF) for a, b in pairs)
        hi = max(_nan_to(up.mul(a, b), _INF) for a, b in pairs)
        return Interval(lo, hi, p)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> Interval:
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers are supported")
        if n == 0:
            return Interval.from_rational(1, self.prec)
        dn, up = _contexts(self.prec)

        def ipow(ctx, x):
            r = mpfr(1)
            for _ in range(n):
                r = ctx.mul(r, x)
            return r

        if self.lo >= 0:
            return Interval(ipow(dn, self.lo), ipow(up, self.hi), self.prec)
        if self.hi <= 0:
            if n % 2 == 0:
                return Interval(ipow(dn, _neg(self.hi)), ipow(up, _neg(self.lo)), self.prec)
            return Interval(_neg(ipow(up, _neg(self.lo))), _neg(ipow(dn, _neg(self.hi))), self.prec)
        big = max(_neg(self.lo), self.hi)
        if n % 2 == 0:
            return Interval(mpfr(0), ipow(up, big), self.prec)
        return Interval(_neg(ipow(up, _neg(self.lo))), ipow(up, self.hi), self.prec)

    # elementary functions

    def exp(self) -> Interval:
        dn, up = _contexts(self.prec)
        return Interval(dn.exp(self.lo), up.exp(self.hi), self.prec)

    def sinh(self) -> Interval:
        dn, up = _contexts(self.prec)
        return Interval(dn.sinh(self.lo), up.sinh(self.hi), self.prec)

    def tanh(self) -> Interval:
        dn, up = _contexts(self.prec)
        return Interval(dn.tanh(self.lo), up.tanh(self.hi), self.prec)

    def cosh(self) -> Interval:
        dn, up = _contexts(self.prec)
        if self.lo >= 0:
            return Interval(dn.cosh(self.lo), up.cosh(self.hi), self.prec)
        if self.hi <= 0:
            return Interval(dn.cosh(self.hi), up.cosh(self.lo), self.prec)
        return Interval(mpfr(1), up.cosh(max(_neg(self.lo), self.hi)), self.prec)

    def sigmoid(self) -> Interval:
        dn, up = _contexts(self.prec)
        one = mpfr(1)
        # 1 / (1 + exp(-x)) is increasing in x
        lo = dn.div(one, up.add(one, up.exp(_neg(self.lo))))
        hi = up.div(one, dn.add(one, dn.exp(_neg(self.hi))))
        return Interval(lo, hi, self.prec)

    # set operations

    def hull(self, other: Interval) -> Interval:
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi), max(self.prec, other.prec))

    def disjoint(self, other: Interval) -> bool:
        return self.hi < other.lo or other.hi < self.lo

    def intersects(self, other: Interval) -> bool:
        return not self.disjoint(other)

    def contains(self, x) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        q = mpq(x.numerator, x.denominator) if isinstance(x, Rational) else x
        return self.lo <= q <= self.hi

    @property
    def width(self):
        return _contexts(self.prec)[1].sub(self.hi, self.lo)

    def midpoint(self):
        dn = _contexts(self.prec)[0]
        return dn.div(dn.add(self.lo, self.hi), 2)

    def endpoints_as_fractions(self) -> tuple[Fraction, Fraction]:
        return (Fraction(*self.lo.as_integer_ratio()), Fraction(*self.hi.as_integer_ratio()))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Interval)
            and self.lo == other.lo
            and self.hi == other.hi
        )

    def __hash__(self) -> int:
        return hash((self.lo, self.hi))

    def __repr__(self) -> str:
        return f"Interval({self.lo}, {self.hi}, prec={self.prec})"

    def to_json(self) -> dict:
        lo, hi = self.endpoints_as_fractions()
        return {"lo": str(lo), "hi": str(hi), "prec": self.prec}


class ScalarField:
    """Common interface: ``const`` embeds a rational, ``exact`` says whether equality is decidable."""

    exact: bool = False
    name: str = ""

    def const(self, q):
        raise NotImplementedError


class RationalField(ScalarField):
    exact = True
    name = "rational"

    def const(self, q) -> Fraction:
        return Fraction(q)

    def __repr__(self) -> str:
        return "RationalField()"

    def __eq__(self, other):
        return isinstance(other, RationalField)

    def __hash__(self):
        return hash("rational")


class IntervalField(ScalarField):
    exact = False

    def __init__(self, bits: int) -> None:
        if bits < 2:
            raise ValueError("interval precision must be at least 2 bits")
        self.bits = int(bits)
        self.name = f"interval:{self.bits}"

    def const(self, q) -> Interval:
        return Interval.from_rational(q, self.bits)

    def __repr__(self) -> str:
        return f"IntervalField({self.bits})"

    def __eq__(self, other):
        return isinstance(other, IntervalField) and other.bits == self.bits

    def __hash__(self):
        return hash(("interval", self.bits))


RATIONAL = RationalField()


def parse_field(text: str) -> ScalarField:
    """Parse ``rational`` or ``interval:BITS``."""
    if text == "rational":
        return RATIONAL
    if text.startswith("interval:"):
        try:
            return IntervalField(int(text.split(":", 1)[1]))
        except ValueError as exc:
            raise ValueError(f"bad interval precision in {text!r}") from exc
    raise ValueError(f"unknown field {text!r}; expected 'rational' or 'interval:BITS'")
