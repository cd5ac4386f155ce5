"""Arbitrary-precision plumbing on top of mpmath.

Two regimes are used throughout the package:

* plain big floats (``mp`` context) for values, always inside an explicit
  ``mp.workprec`` scope derived from a caller-supplied precision in bits;
* intervals (``iv`` context) whenever a strict inequality has to be decided
  or a bound has to be certified.

Nothing in here relies on an ambient global precision: every public helper
takes the precision it works at.
"""

from __future__ import annotations

import contextlib
from fractions import Fraction

import mpmath
from mpmath import iv, mp

from .exactnum import QC, QuadVal


class BoundedSeriesError(Exception):
    """Base class for errors raised by this package."""


class RangeOverflowError(BoundedSeriesError):
    """A computation produced a non-finite big float."""


class UndecidableAtPrecision(BoundedSeriesError):
    """A strict-inequality decision was ambiguous at the working precision.

    Carries ``prec`` (the precision that failed) so callers can retry higher.
    """

    def __init__(self, message, prec):
        super().__init__(f"{message} (undecidable at {prec} bits)")
        self.prec = prec


DEFAULT_PREC = 256


@contextlib.contextmanager
def iv_workprec(bits: int):
    """Temporarily set the interval context precision."""
    old = iv.prec
    iv.prec = int(bits)
    try:
        yield iv
    finally:
        iv.prec = old


def to_mpf(x, prec: int):
    """Convert an exact or float-like real number to mpf at ``prec`` bits."""
    with mp.workprec(prec):
        if isinstance(x, Fraction):
            return mp.mpf(x.numerator) / x.denominator
        if isinstance(x, QuadVal):
            return mp.mpf(x.a.numerator) / x.a.denominator + (
                (mp.mpf(x.b.numerator) / x.b.denominator) * mp.sqrt(mp.mpf(x.d.numerator) / x.d.denominator)
                if x.b != 0 else mp.mpf(0)
            )
        if isinstance(x, QC):
            if not x.is_real:
                raise ValueError("complex value where a real was expected")
            return mp.mpf(x.re.numerator) / x.re.denominator
        return mp.mpf(x)


def to_mpc(x, prec: int):
    """Convert an exact or float-like number to mpc at ``prec`` bits."""
    with mp.workprec(prec):
        if isinstance(x, QC):
            re = mp.mpf(x.re.numerator) / x.re.denominator
            im = mp.mpf(x.im.numerator) / x.im.denominator
            return mp.mpc(re, im)
        if isinstance(x, complex):
            return mp.mpc(x)
        if isinstance(x, mpmath.mpc):
            return +x
        return mp.mpc(to_mpf(x, prec))


def to_iv(x):
    """Interval enclosure of an exact number at the current iv precision."""
    if isinstance(x, Fraction):
        return iv.mpf(x.numerator) / x.denominator
    if isinstance(x, QuadVal):
        out = iv.mpf(x.a.numerator) / x.a.denominator
        if x.b != 0:
            rad = iv.mpf(x.d.numerator) / x.d.denominator
            out += (iv.mpf(x.b.numerator) / x.b.denominator) * iv.sqrt(rad)
        return out
    if isinstance(x, int):
        return iv.mpf(x)
    if isinstance(x, mpmath.mpf):
        return iv.mpf(x)
    if isinstance(x, QC):
        if not x.is_real:
            raise ValueError("complex value has no real interval enclosure")
        return iv.mpf(x.re.numerator) / x.re.denominator
    return iv.mpf(x)


def iv_lo(x):
    """Lower endpoint of an interval as an mpf."""
    return mpmath.make_mpf(x._mpi_[0])


def iv_hi(x):
    """Upper endpoint of an interval as an mpf."""
    return mpmath.make_mpf(x._mpi_[1])


def lt_certain(x, bound):
    """Tri-state interval comparison x < bound: True/False/None."""
    b = to_iv(bound) if not hasattr(bound, "_mpi_") else bound
    if iv_hi(x) < iv_lo(b):
        return True
    if iv_lo(x) >= iv_hi(b):
        return False
    return None


def ensure_finite(*values):
    for v in values:
        if isinstance(v, mpmath.mpc):
            if not (mp.isfinite(v.real) and mp.isfinite(v.imag)):
                raise RangeOverflowError(f"non-finite value {v}")
        else:
            if not mp.isfinite(v):
                raise RangeOverflowError(f"non-finite value {v}")
    return values[0] if len(values) == 1 else values


def mpf_to_fraction(x) -> Fraction:
    """Exact rational value of an mpf (every finite mpf is dyadic)."""
    if not mp.isfinite(x):
        raise RangeOverflowError(f"cannot convert {x} to a fraction")
    sign, man, exp, _ = x._mpf_
    if man == 0:
        return Fraction(0)
    man = int(man)
    if sign:
        man = -man
    if exp >= 0:
        return Fraction(man * (1 << exp))
    return Fraction(man, 1 << (-exp))


def mpf_to_triple(x, err=None):
    """Serialize an mpf as [mantissa, exponent, error] with decimal strings.

    The represented value is mantissa * 2**exponent exactly; ``error`` is an
    upper bound on the distance to the quantity being reported.
    """
    if not mp.isfinite(x):
        raise RangeOverflowError(f"cannot serialize {x}")
    sign, man, exp, _ = x._mpf_
    man = int(man)
    if sign:
        man = -man
    err_s = "0"
    if err is not None:
        from .exactnum import format_rational
        err_s = format_rational(mpf_to_fraction(err)) if not isinstance(err, (int, Fraction)) else format_rational(Fraction(err))
    return [str(man), int(exp), err_s]


def triple_to_mpf(t, prec: int):
    man = int(t[0])
    exp = int(t[1])
    with mp.workprec(max(prec, man.bit_length() + 8)):
        return mp.mpf(man) * mp.power(2, exp)


def dyadic_fraction_of_triple(t) -> Fraction:
    man = int(t[0])
    exp = int(t[1])
    if exp >= 0:
        return Fraction(man * (1 << exp))
    return Fraction(man, 1 << (-exp))


def abs_upper(z, prec: int):
    """Certified upper bound on |z| for an mpf/mpc computed at ``prec`` bits."""
    with mp.workprec(prec + 8):
        m = mp.fabs(z)
        # one ulp of slack covers the rounding of fabs/hypot
        return m * (1 + mp.mpf(2) ** (-(prec)))


def bitlen(n: int) -> int:
    return int(n).bit_length()
