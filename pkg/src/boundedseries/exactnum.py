"""Exact scalar arithmetic for series coefficients.

Coefficients are kept exact for as long as possible: rationals
(``fractions.Fraction``), complex rationals (:class:`QC`), and values in a
real quadratic extension a + b*sqrt(d) (:class:`QuadVal`).  Rounding happens
only at evaluation time, never inside coefficient algebra.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional, Union


class ExactArithmeticError(ArithmeticError):
    pass


def parse_rational(s) -> Fraction:
    """Parse 'p/q' or a decimal string into an exact Fraction."""
    if isinstance(s, Fraction):
        return s
    if isinstance(s, int):
        return Fraction(s)
    if isinstance(s, str):
        return Fraction(s.strip())
    raise ValueError(f"cannot parse rational from {s!r}")


def format_rational(q: Fraction) -> str:
    """Render a Fraction as 'p/q' (or 'p' when the denominator is 1)."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def exact_sqrt(q: Fraction) -> Optional[Fraction]:
    """Exact square root of a nonnegative rational, or None if irrational."""
    q = Fraction(q)
    if q < 0:
        raise ValueError("exact_sqrt of negative rational")
    if q == 0:
        return Fraction(0)
    rn = math.isqrt(q.numerator)
    rd = math.isqrt(q.denominator)
    if rn * rn == q.numerator and rd * rd == q.denominator:
        return Fraction(rn, rd)
    return None


class QC:
    """Complex number with exact rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    def __repr__(self):
        return f"QC({self.re!r}, {self.im!r})"

    def __eq__(self, other):
        other = as_qc(other)
        if other is None:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __add__(self, other):
        other = as_qc(other)
        if other is None:
            return NotImplemented
        return QC(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return QC(-self.re, -self.im)

    def __sub__(self, other):
        other = as_qc(other)
        if other is None:
            return NotImplemented
        return QC(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = as_qc(other)
        if other is None:
            return NotImplemented
        return QC(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def conj(self) -> "QC":
        return QC(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    @property
    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    @property
    def is_real(self) -> bool:
        return self.im == 0


def as_qc(x) -> Optional[QC]:
    if isinstance(x, QC):
        return x
    if isinstance(x, (int, Fraction)):
        return QC(x, 0)
    return None


class QuadVal:
    """Real value a + b*sqrt(d) with a, b, d exact rationals, d > 0.

    Arithmetic is closed for a fixed radicand d; mixing distinct radicands
    raises.  A plain rational is the b == 0 case and combines with any d.
    Sign and comparisons are exact (no rounding), which is what certificate
    window sums rely on.
    """

    __slots__ = ("a", "b", "d")

    def __init__(self, a, b=0, d=0):
        self.a = Fraction(a)
        self.b = Fraction(b)
        self.d = Fraction(d)
        if self.b != 0:
            if self.d <= 0:
                raise ValueError("radicand must be positive")
            r = exact_sqrt(self.d)
            if r is not None:
                # collapse perfect squares so b != 0 implies irrationality
                self.a += self.b * r
                self.b = Fraction(0)
                self.d = Fraction(0)
        else:
            self.d = Fraction(0)

    def __repr__(self):
        if self.b == 0:
            return f"QuadVal({self.a!r})"
        return f"QuadVal({self.a!r} + {self.b!r}*sqrt({self.d!r}))"

    @property
    def is_rational(self) -> bool:
        return self.b == 0

    def rational_value(self) -> Fraction:
        if self.b != 0:
            raise ExactArithmeticError("value is irrational")
        return self.a

    def _coerce(self, other) -> Optional["QuadVal"]:
        if isinstance(other, QuadVal):
            if self.b != 0 and other.b != 0 and self.d != other.d:
                raise ExactArithmeticError(
                    f"incompatible radicands {self.d} and {other.d}"
                )
            return other
        if isinstance(other, (int, Fraction)):
            return QuadVal(other)
        return None

    def _radicand_with(self, other: "QuadVal") -> Fraction:
        return self.d if self.b != 0 else other.d

    def __eq__(self, other):
        try:
            other = self._coerce(other)
        except ExactArithmeticError:
            return False
        if other is None:
            return NotImplemented
        return self.a == other.a and self.b == other.b and (
            self.b == 0 or self.d == other.d
        )

    def __hash__(self):
        return hash((self.a, self.b, self.d))

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return QuadVal(self.a + other.a, self.b + other.b,
                       self._radicand_with(other))

    __radd__ = __add__

    def __neg__(self):
        return QuadVal(-self.a, -self.b, self.d)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return QuadVal(self.a - other.a, self.b - other.b,
                       self._radicand_with(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        d = self._radicand_with(other)
        return QuadVal(
            self.a * other.a + self.b * other.b * d,
            self.a * other.b + self.b * other.a,
            d,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if other.a == 0 and other.b == 0:
            raise ZeroDivisionError("QuadVal division by zero")
        if other.b == 0:
            return QuadVal(self.a / other.a, self.b / other.a, self.d)
        d = self._radicand_with(other)
        # 1/(a+b*sqrt(d)) = (a-b*sqrt(d))/(a^2-b^2 d); denominator is nonzero
        # because b != 0 forces sqrt(d) irrational
        denom = other.a * other.a - other.b * other.b * d
        num = self * QuadVal(other.a, -other.b, d)
        return QuadVal(num.a / denom, num.b / denom, d)

    def __rtruediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return QuadVal(other) / self
        return NotImplemented

    def sign(self) -> int:
        """Exact sign in {-1, 0, 1}."""
        a, b = self.a, self.b
        if b == 0:
            return (a > 0) - (a < 0)
        if a == 0:
            return 1 if b > 0 else -1
        if a > 0 and b > 0:
            return 1
        if a < 0 and b < 0:
            return -1
        # opposite signs: compare a^2 against b^2 d
        lhs = a * a
        rhs = b * b * self.d
        if lhs == rhs:
            return 0
        if a > 0:  # b < 0
            return 1 if lhs > rhs else -1
        return -1 if lhs > rhs else 1

    def __abs__(self):
        return self if self.sign() >= 0 else -self

    def __lt__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return (self - other).sign() < 0

    def __le__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return (self - other).sign() <= 0

    def __gt__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return (self - other).sign() > 0

    def __ge__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return (self - other).sign() >= 0


Exact = Union[int, Fraction, QC, QuadVal]


def ex_is_zero(v: Exact) -> bool:
    if isinstance(v, QC):
        return v.is_zero
    if isinstance(v, QuadVal):
        return v.a == 0 and v.b == 0
    return v == 0


def ex_is_real(v: Exact) -> bool:
    return not isinstance(v, QC) or v.is_real


def ex_add(u: Exact, v: Exact) -> Exact:
    if isinstance(u, QC) or isinstance(v, QC):
        uq, vq = _to_qc(u), _to_qc(v)
        return uq + vq
    return u + v


def ex_mul(u: Exact, v: Exact) -> Exact:
    if isinstance(u, QC) or isinstance(v, QC):
        return _to_qc(u) * _to_qc(v)
    return u * v


def ex_neg(v: Exact) -> Exact:
    return -v


def _to_qc(v: Exact) -> QC:
    if isinstance(v, QC):
        return v
    if isinstance(v, QuadVal):
        if not v.is_rational:
            raise ExactArithmeticError("cannot mix quadratic values with complex ones")
        return QC(v.a, 0)
    return QC(v, 0)


def ex_abs2(v: Exact):
    """|v|^2, exact.  Fraction for rational/complex input, QuadVal otherwise."""
    if isinstance(v, QC):
        return v.abs2()
    if isinstance(v, QuadVal):
        sq = v * v
        return sq.a if sq.is_rational else sq
    f = Fraction(v)
    return f * f


def ex_sign(v: Exact) -> int:
    """Exact sign of a real value; raises on genuinely complex input."""
    if isinstance(v, QC):
        if not v.is_real:
            raise ExactArithmeticError("sign of a non-real value")
        v = v.re
    if isinstance(v, QuadVal):
        return v.sign()
    return (v > 0) - (v < 0)
