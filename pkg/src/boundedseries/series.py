"""Power series convergent on the whole real line, as coefficient rules.

A :class:`SeriesSpec` wraps a coefficient rule.  Every built-in rule produces
exact coefficients (rational, complex rational, or rational + rational*sqrt(d))
so downstream ratio analysis never inherits rounding noise.  Rounding enters
only in :func:`evaluate` and friends, which return certified error bounds:
a rounding bound always, and a truncation bound whenever the rule carries an
analytic tail majorant.

Tail majorants bound ``sum_{n>N} |a_n| |x|^n`` (absolute tails), which is
stronger than what plain evaluation needs and exactly what the l1 machinery
needs at x = 1.
"""

from __future__ import annotations

import hashlib
import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import mpmath
from mpmath import iv, mp

from .bigreal import (
    DEFAULT_PREC,
    BoundedSeriesError,
    RangeOverflowError,
    abs_upper,
    bitlen,
    ensure_finite,
    iv_hi,
    iv_lo,
    iv_workprec,
    to_iv,
    to_mpc,
    to_mpf,
)
from .exactnum import (
    QC,
    Exact,
    QuadVal,
    ex_abs2,
    ex_add,
    ex_is_real,
    ex_is_zero,
    ex_mul,
    ex_sign,
    exact_sqrt,
    format_rational,
    parse_rational,
)


class UndefinedCoefficientError(BoundedSeriesError):
    pass


class ComplexCoefficientsError(BoundedSeriesError):
    pass


# ---------------------------------------------------------------------------
# sign rules for the theta family


class SignRule:
    """Total sign rule n -> {+1, -1}.

    Kinds: ``all_plus``, ``alternating``, an explicit finite list (indices
    past the end are an error), or a seeded hash rule so randomized sweeps
    stay reproducible and serializable.
    """

    def __init__(self, kind: str, data=None):
        if kind not in ("all_plus", "alternating", "explicit", "hash"):
            raise ValueError(f"unknown sign rule {kind!r}")
        self.kind = kind
        self.data = tuple(data) if kind == "explicit" else data
        if kind == "explicit":
            if not all(s in (1, -1) for s in self.data):
                raise ValueError("explicit signs must be +-1")

    def __call__(self, n: int) -> int:
        if self.kind == "all_plus":
            return 1
        if self.kind == "alternating":
            return 1 if n % 2 == 0 else -1
        if self.kind == "explicit":
            if n >= len(self.data):
                raise UndefinedCoefficientError(
                    f"explicit sign rule has no entry at index {n}"
                )
            return self.data[n]
        h = hashlib.sha256(f"{self.data}:{n}".encode()).digest()
        return 1 if h[0] & 1 else -1

    def __eq__(self, other):
        return (
            isinstance(other, SignRule)
            and self.kind == other.kind
            and self.data == other.data
        )

    def to_json(self):
        if self.kind in ("all_plus", "alternating"):
            return self.kind
        if self.kind == "explicit":
            return {"explicit": list(self.data)}
        return {"hash_seed": self.data}

    @staticmethod
    def from_json(obj) -> "SignRule":
        if obj in ("all_plus", "alternating"):
            return SignRule(obj)
        if isinstance(obj, dict) and "explicit" in obj:
            return SignRule("explicit", [int(s) for s in obj["explicit"]])
        if isinstance(obj, dict) and "hash_seed" in obj:
            return SignRule("hash", int(obj["hash_seed"]))
        raise ValueError(f"bad sign rule {obj!r}")


def hash_signs(seed: int) -> SignRule:
    return SignRule("hash", int(seed))


# ---------------------------------------------------------------------------
# tail majorant helper


def _ratio_capped_tail(term, ratio_fn, k, max_steps=2_000_000):
    """Upper enclosure of sum_{j>=k} t_j given t_k and certified ratio bounds.

    ``term`` is an iv enclosure of t_k >= 0 and ``ratio_fn(j)`` an iv bound on
    t_{j+1}/t_j.  Terms are summed until the ratio is certainly <= 1/2, after
    which a geometric bound finishes the tail.  Must run inside iv_workprec.
    """
    total = iv.mpf(0)
    for _ in range(max_steps):
        r = ratio_fn(k)
        if iv_hi(r) <= 0.5:
            return total + 2 * term
        total += term
        term = term * r
        k += 1
    raise RangeOverflowError("tail ratio did not fall below 1/2")


_FACT_LOCK = threading.Lock()
_FACTS = [1, 1]


def _fact(n: int) -> int:
    """Memoized factorial (sequential products, shared across rules)."""
    if n < len(_FACTS):
        return _FACTS[n]
    with _FACT_LOCK:
        while len(_FACTS) <= n:
            _FACTS.append(_FACTS[-1] * len(_FACTS))
    return _FACTS[n]


def _iv_factorial(n: int):
    return to_iv(_fact(n))


def _log2_abs_upper(v) -> Optional[int]:
    """Integer upper bound for log2|v| of an exact value; None when v = 0."""
    if isinstance(v, QC):
        a = _log2_abs_upper(v.re)
        b = _log2_abs_upper(v.im)
        if a is None and b is None:
            return None
        if a is None:
            return b + 1
        if b is None:
            return a + 1
        return max(a, b) + 1
    if isinstance(v, QuadVal):
        a = _log2_abs_upper(v.a)
        if v.b == 0:
            return a
        dl = _log2_abs_upper(v.d)
        b = _log2_abs_upper(v.b) + max(0, (dl + 1) // 2) + 1
        if a is None:
            return b
        return max(a, b) + 1
    f = Fraction(v)
    if f == 0:
        return None
    return abs(f.numerator).bit_length() - f.denominator.bit_length() + 1


# ---------------------------------------------------------------------------
# coefficient rules


class Rule:
    json_name: str = "?"
    certified_tail = False

    def exact(self, n: int) -> Exact:
        raise NotImplementedError

    def degree(self) -> Optional[int]:
        """Largest index with a nonzero coefficient, or None if unbounded."""
        return None

    def tail_abs_iv(self, x_abs, N: int):
        """iv upper bound on sum_{n>N} |a_n| |x|^n, or None. Runs inside iv scope."""
        return None

    def sign_exact(self, n: int) -> Optional[int]:
        """Cheap exact sign when the rule knows it without building a_n."""
        return None

    def is_real_rule(self) -> bool:
        return True

    def params(self) -> dict:
        return {}

    def label(self) -> str:
        return self.json_name


class ExplicitRule(Rule):
    json_name = "explicit"
    certified_tail = True

    def __init__(self, coeffs: Sequence):
        self.coeffs = tuple(_coerce_exact(c) for c in coeffs)

    def exact(self, n):
        if n < len(self.coeffs):
            return self.coeffs[n]
        return Fraction(0)

    def degree(self):
        for i in range(len(self.coeffs) - 1, -1, -1):
            if not ex_is_zero(self.coeffs[i]):
                return i
        return -1

    def tail_abs_iv(self, x_abs, N):
        total = iv.mpf(0)
        for n in range(N + 1, len(self.coeffs)):
            a2 = ex_abs2(self.coeffs[n])
            total += iv.sqrt(to_iv(a2)) * x_abs ** n
        return total

    def is_real_rule(self):
        return all(ex_is_real(c) for c in self.coeffs)

    def params(self):
        return {"coeffs": [_exact_to_json(c) for c in self.coeffs]}

    def label(self):
        return f"explicit[{len(self.coeffs)}]"


class GaussianRule(Rule):
    """z^m * exp(-lam * z^2) with rational lam > 0."""

    json_name = "gaussian"
    certified_tail = True

    def __init__(self, lam, m: int = 0):
        self.lam = parse_rational(lam)
        self.m = int(m)
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.m < 0:
            raise ValueError("m must be nonnegative")

    def exact(self, n):
        j = n - self.m
        if j < 0 or j % 2:
            return Fraction(0)
        k = j // 2
        return Fraction((-self.lam) ** k, _fact(k))

    def tail_abs_iv(self, x_abs, N):
        k0 = max(0, (N - self.m) // 2 + 1)
        lam = to_iv(self.lam)
        r = lam * x_abs ** 2
        term = x_abs ** (self.m + 2 * k0) * lam ** k0 / _iv_factorial(k0)
        return _ratio_capped_tail(term, lambda k: r / (k + 1), k0)

    def sign_exact(self, n):
        j = n - self.m
        if j < 0 or j % 2:
            return 0
        return 1 if (j // 2) % 2 == 0 else -1

    def params(self):
        return {"lam": format_rational(self.lam), "m": self.m}

    def label(self):
        return f"z^{self.m}*exp(-{format_rational(self.lam)}*z^2)"


class PolyGaussianRule(Rule):
    """p(z) * exp(-z^{2n}) for a polynomial head p and n >= 1."""

    json_name = "poly_gaussian"
    certified_tail = True

    def __init__(self, poly: Sequence, n: int):
        self.poly = tuple(_coerce_exact(c) for c in poly)
        self.n = int(n)
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.poly:
            raise ValueError("empty polynomial")

    def exact(self, j):
        out: Exact = Fraction(0)
        step = 2 * self.n
        for i, p in enumerate(self.poly):
            if ex_is_zero(p):
                continue
            d = j - i
            if d >= 0 and d % step == 0:
                k = d // step
                out = ex_add(out, ex_mul(p, Fraction((-1) ** k, _fact(k))))
        return out

    def tail_abs_iv(self, x_abs, N):
        step = 2 * self.n
        r = x_abs ** step
        total = iv.mpf(0)
        for i, p in enumerate(self.poly):
            if ex_is_zero(p):
                continue
            k0 = max(0, (N - i) // step + 1)
            pi = iv.sqrt(to_iv(ex_abs2(p)))
            term = pi * x_abs ** (i + step * k0) / _iv_factorial(k0)
            total += _ratio_capped_tail(term, lambda k: r / (k + 1), k0)
        return total

    def is_real_rule(self):
        return all(ex_is_real(c) for c in self.poly)

    def params(self):
        return {"poly": [_exact_to_json(c) for c in self.poly], "n": self.n}

    def label(self):
        return f"poly[deg {len(self.poly)-1}]*exp(-z^{2*self.n})"


class SinRule(Rule):
    json_name = "sin"
    certified_tail = True

    def exact(self, n):
        if n % 2 == 0:
            return Fraction(0)
        k = (n - 1) // 2
        return Fraction((-1) ** k, _fact(n))

    def tail_abs_iv(self, x_abs, N):
        k0 = max(0, (N - 1) // 2 + 1)
        x2 = x_abs ** 2
        term = x_abs ** (2 * k0 + 1) / _iv_factorial(2 * k0 + 1)
        return _ratio_capped_tail(
            term, lambda k: x2 / ((2 * k + 2) * (2 * k + 3)), k0
        )

    def label(self):
        return "sin(z)"


class CosRule(Rule):
    json_name = "cos"
    certified_tail = True

    def exact(self, n):
        if n % 2:
            return Fraction(0)
        k = n // 2
        return Fraction((-1) ** k, _fact(n))

    def tail_abs_iv(self, x_abs, N):
        k0 = max(0, N // 2 + 1)
        x2 = x_abs ** 2
        term = x_abs ** (2 * k0) / _iv_factorial(2 * k0)
        return _ratio_capped_tail(
            term, lambda k: x2 / ((2 * k + 1) * (2 * k + 2)), k0
        )

    def label(self):
        return "cos(z)"


class SinScaledRule(Rule):
    """sin(m*z)/m for integer m >= 1."""

    json_name = "sin_scaled"
    certified_tail = True

    def __init__(self, m: int):
        self.m = int(m)
        if self.m < 1:
            raise ValueError("m must be >= 1")

    def exact(self, n):
        if n % 2 == 0:
            return Fraction(0)
        k = (n - 1) // 2
        return Fraction((-1) ** k * self.m ** (2 * k), _fact(n))

    def tail_abs_iv(self, x_abs, N):
        k0 = max(0, (N - 1) // 2 + 1)
        mx2 = (self.m * x_abs) ** 2
        term = (
            to_iv(self.m ** (2 * k0))
            * x_abs ** (2 * k0 + 1)
            / _iv_factorial(2 * k0 + 1)
        )
        return _ratio_capped_tail(
            term, lambda k: mx2 / ((2 * k + 2) * (2 * k + 3)), k0
        )

    def params(self):
        return {"m": self.m}

    def label(self):
        return f"sin({self.m}z)/{self.m}"


class _ExpPowerRule(Rule):
    """Common shape exp(-(c*z)^{2m}) style rules: a_{step*k} = (+-base)^k / k!."""

    certified_tail = True
    step: int
    base: Fraction  # |single-term base| contribution per k

    def exact(self, n):
        if n % self.step:
            return Fraction(0)
        k = n // self.step
        return Fraction((-self.base) ** k, _fact(k))

    def tail_abs_iv(self, x_abs, N):
        k0 = max(0, N // self.step + 1)
        r = to_iv(self.base) * x_abs ** self.step
        term = (
            to_iv(self.base) ** k0 * x_abs ** (self.step * k0) / _iv_factorial(k0)
        )
        return _ratio_capped_tail(term, lambda k: r / (k + 1), k0)


class ExpNeg2mRule(_ExpPowerRule):
    """exp(-z^{2m})."""

    json_name = "exp_neg_2m"

    def __init__(self, m: int):
        self.m = int(m)
        if self.m < 1:
            raise ValueError("m must be >= 1")
        self.step = 2 * self.m
        self.base = Fraction(1)

    def params(self):
        return {"m": self.m}

    def label(self):
        return f"exp(-z^{2*self.m})"


class ExpNegHalf2mRule(_ExpPowerRule):
    """exp(-(z/2)^{2m})."""

    json_name = "exp_neg_half_2m"

    def __init__(self, m: int):
        self.m = int(m)
        if self.m < 1:
            raise ValueError("m must be >= 1")
        self.step = 2 * self.m
        self.base = Fraction(1, 2 ** (2 * self.m))

    def params(self):
        return {"m": self.m}

    def label(self):
        return f"exp(-(z/2)^{2*self.m})"


class ExpNegSqOverMRule(_ExpPowerRule):
    """exp(-z^2/m)."""

    json_name = "exp_neg_sq_over_m"

    def __init__(self, m: int):
        self.m = int(m)
        if self.m < 1:
            raise ValueError("m must be >= 1")
        self.step = 2
        self.base = Fraction(1, self.m)

    def params(self):
        return {"m": self.m}

    def label(self):
        return f"exp(-z^2/{self.m})"


class ThetaRule(Rule):
    """Signed theta-type coefficients: a_n = sign(n) * rho^{n^2}, 0 < rho < 1.

    ``rho`` is either an exact rational or the square root of one (the latter
    keeps e.g. rho = 2^{-1/2} exact: even powers are rational, odd powers are
    rational multiples of sqrt(rho^2)).
    """

    json_name = "theta"
    certified_tail = True

    def __init__(self, rho=None, signs: SignRule = None, rho2=None):
        if (rho is None) == (rho2 is None):
            raise ValueError("pass exactly one of rho, rho2")
        if rho is not None:
            self.rho2 = parse_rational(rho) ** 2
            self.rho_rational: Optional[Fraction] = parse_rational(rho)
        else:
            self.rho2 = parse_rational(rho2)
            r = exact_sqrt(self.rho2)
            self.rho_rational = r  # may be None: genuinely irrational rho
        if not (0 < self.rho2 < 1):
            raise ValueError("rho must lie in (0, 1)")
        self.signs = signs or SignRule("all_plus")

    def exact(self, n):
        s = self.signs(n)
        e = n * n
        if self.rho_rational is not None:
            return s * self.rho_rational ** e
        if e % 2 == 0:
            return s * self.rho2 ** (e // 2)
        return QuadVal(0, s * self.rho2 ** ((e - 1) // 2), self.rho2)

    def turan_global(self):
        """Exact global ratio |a_{n+1}a_{n-1}|/|a_n|^2 = rho^2, no zeros."""
        return self.rho2

    def sign_exact(self, n):
        return self.signs(n)

    def tail_abs_iv(self, x_abs, N):
        rho = (
            to_iv(self.rho_rational)
            if self.rho_rational is not None
            else iv.sqrt(to_iv(self.rho2))
        )
        n0 = N + 1
        term = rho ** (n0 * n0) * x_abs ** n0
        return _ratio_capped_tail(term, lambda n: rho ** (2 * n + 1) * x_abs, n0)

    def params(self):
        if self.rho_rational is not None:
            return {
                "rho": format_rational(self.rho_rational),
                "signs": self.signs.to_json(),
            }
        return {"rho": {"sqrt": format_rational(self.rho2)}, "signs": self.signs.to_json()}

    def label(self):
        if self.rho_rational is not None:
            return f"theta(rho={format_rational(self.rho_rational)})"
        return f"theta(rho=sqrt({format_rational(self.rho2)}))"


class BellEGFRule(Rule):
    """exp(1 - exp(z)): coefficients b_n / n! with exact integer b_n."""

    json_name = "bell_egf"
    certified_tail = True

    def __init__(self):
        self._values = [1]
        self._lock = threading.Lock()

    def _ensure(self, n):
        if n < len(self._values):
            return
        with self._lock:
            if n < len(self._values):
                return
            from .bell import extend_complementary_bell

            self._values = extend_complementary_bell(self._values, n)

    def exact(self, n):
        self._ensure(n)
        return Fraction(self._values[n], _fact(n))

    def tail_abs_iv(self, x_abs, N):
        # Cauchy bound |b_n|/n! <= e^2 * exp(e^R - 1) / R^n with R = max(2|x|, 2),
        # via |b_n| <= e^2 * n! [z^n] exp(e^z - 1).  Crude but certified.
        R = 2 * x_abs
        if iv_hi(R) < 2:
            R = iv.mpf(2)
        growth = iv.exp(iv.mpf(2)) * iv.exp(iv.exp(R) - 1)
        q = x_abs / R  # <= 1/2
        return growth * q ** (N + 1) * 2

    def sign_exact(self, n):
        self._ensure(n)
        v = self._values[n]
        return (v > 0) - (v < 0)

    def label(self):
        return "exp(1-exp(z))"


class UserTailRule(Rule):
    """Explicit head plus an optional exact-coefficient callback."""

    json_name = "user_tail"

    def __init__(self, head: Sequence, fn: Optional[Callable[[int], Exact]] = None,
                 tail_bound=None, name="user_tail"):
        self.head = tuple(_coerce_exact(c) for c in head)
        self.fn = fn
        self._tail = tail_bound  # callable (x_abs_iv, N) -> iv, already certified
        self.certified_tail = tail_bound is not None
        self.name = name

    def exact(self, n):
        if n < len(self.head):
            return self.head[n]
        if self.fn is None:
            raise UndefinedCoefficientError(
                f"{self.name}: coefficient {n} is undefined"
            )
        v = self.fn(n)
        if v is None:
            raise UndefinedCoefficientError(
                f"{self.name}: coefficient {n} is undefined"
            )
        return _coerce_exact(v)

    def tail_abs_iv(self, x_abs, N):
        if self._tail is None:
            return None
        return self._tail(x_abs, N)

    def label(self):
        return self.name


class ShiftedRule(Rule):
    """Backward shift by k: coefficient n of the result is coefficient n+k."""

    json_name = "shifted"

    def __init__(self, inner: "SeriesSpec", k: int):
        if k < 0:
            raise ValueError("shift must be nonnegative")
        # flatten nested shifts so shift(shift(s,1),1) == shift(s,2) structurally
        if isinstance(inner.rule, ShiftedRule):
            k += inner.rule.k
            inner = inner.rule.inner
        self.inner = inner
        self.k = int(k)
        self.certified_tail = inner.rule.certified_tail

    def exact(self, n):
        return self.inner.coeff(n + self.k)

    def degree(self):
        d = self.inner.degree()
        if d is None:
            return None
        return max(d - self.k, -1)

    def tail_abs_iv(self, x_abs, N):
        if iv_hi(x_abs) == 0:
            return iv.mpf(0)
        inner_tail = self.inner.rule.tail_abs_iv(x_abs, N + self.k)
        if inner_tail is None:
            return None
        return inner_tail / x_abs ** self.k

    def sign_exact(self, n):
        return self.inner.rule.sign_exact(n + self.k)

    def is_real_rule(self):
        return self.inner.rule.is_real_rule()

    def params(self):
        return {"k": self.k, "inner": series_to_json(self.inner)}

    def label(self):
        return f"shift^{self.k}({self.inner.label()})"


class LeftExtendRule(Rule):
    """c + z * f(z): the one-parameter right inverse of the backward shift."""

    json_name = "left_extend"

    def __init__(self, inner: "SeriesSpec", c):
        self.inner = inner
        self.c = _coerce_exact(c)
        self.certified_tail = inner.rule.certified_tail

    def exact(self, n):
        if n == 0:
            return self.c
        return self.inner.coeff(n - 1)

    def degree(self):
        d = self.inner.degree()
        if d is None:
            return None
        d = d + 1 if d >= 0 else 0
        if d == 0 and ex_is_zero(self.c):
            return -1
        return d

    def tail_abs_iv(self, x_abs, N):
        if N < 0:
            return None
        inner = self.inner.rule
        if N == 0:
            a0 = iv.sqrt(to_iv(ex_abs2(self.inner.coeff(0))))
            t = inner.tail_abs_iv(x_abs, 0)
            if t is None:
                return None
            return x_abs * (a0 + t)
        t = inner.tail_abs_iv(x_abs, N - 1)
        if t is None:
            return None
        return x_abs * t

    def is_real_rule(self):
        return ex_is_real(self.c) and self.inner.rule.is_real_rule()

    def params(self):
        return {"c": _exact_to_json(self.c), "inner": series_to_json(self.inner)}

    def label(self):
        return f"extend({self.inner.label()})"


class AlternateFlipRule(Rule):
    """Coefficientwise x -> -x: a_n becomes (-1)^n a_n.

    Magnitudes are untouched, so concavity constants and tail majorants pass
    through unchanged; used for the reduction that turns eventually
    alternating signs into eventually constant ones.
    """

    json_name = "alternate_flip"

    def __init__(self, inner: "SeriesSpec"):
        if isinstance(inner.rule, AlternateFlipRule):
            # flipping twice is the identity
            self.inner = inner.rule.inner
            self._double = True
        else:
            self.inner = inner
            self._double = False

    def _sgn(self, n):
        if self._double:
            return 1
        return 1 if n % 2 == 0 else -1

    def exact(self, n):
        v = self.inner.coeff(n)
        return v if self._sgn(n) == 1 else ex_mul(Fraction(-1), v)

    def degree(self):
        return self.inner.degree()

    def tail_abs_iv(self, x_abs, N):
        return self.inner.rule.tail_abs_iv(x_abs, N)

    def sign_exact(self, n):
        s = self.inner.rule.sign_exact(n)
        if s is None:
            return None
        return s * self._sgn(n)

    def is_real_rule(self):
        return self.inner.rule.is_real_rule()

    def turan_global(self):
        fn = getattr(self.inner.rule, "turan_global", None)
        return fn() if fn is not None else None

    @property
    def certified_tail(self):
        return self.inner.rule.certified_tail

    def params(self):
        return {"inner": series_to_json(self.inner)}

    def label(self):
        return f"flip({self.inner.label()})"


def alternate_flip(s: "SeriesSpec") -> "SeriesSpec":
    return SeriesSpec(AlternateFlipRule(s))


class SumRule(Rule):
    json_name = "sum"

    def __init__(self, s: "SeriesSpec", t: "SeriesSpec"):
        self.s = s
        self.t = t
        self.certified_tail = s.rule.certified_tail and t.rule.certified_tail

    def exact(self, n):
        return ex_add(self.s.coeff(n), self.t.coeff(n))

    def degree(self):
        ds, dt = self.s.degree(), self.t.degree()
        if ds is None or dt is None:
            return None
        return max(ds, dt)  # upper bound; cancellation may lower it

    def tail_abs_iv(self, x_abs, N):
        a = self.s.rule.tail_abs_iv(x_abs, N)
        b = self.t.rule.tail_abs_iv(x_abs, N)
        if a is None or b is None:
            return None
        return a + b

    def is_real_rule(self):
        return self.s.rule.is_real_rule() and self.t.rule.is_real_rule()

    def params(self):
        return {"terms": [series_to_json(self.s), series_to_json(self.t)]}

    def label(self):
        return f"({self.s.label()} + {self.t.label()})"


class ScaledRule(Rule):
    json_name = "scaled"

    def __init__(self, inner: "SeriesSpec", c):
        self.inner = inner
        self.c = _coerce_exact(c)
        self.certified_tail = inner.rule.certified_tail

    def exact(self, n):
        return ex_mul(self.c, self.inner.coeff(n))

    def degree(self):
        if ex_is_zero(self.c):
            return -1
        return self.inner.degree()

    def tail_abs_iv(self, x_abs, N):
        t = self.inner.rule.tail_abs_iv(x_abs, N)
        if t is None:
            return None
        return iv.sqrt(to_iv(ex_abs2(self.c))) * t

    def is_real_rule(self):
        return ex_is_real(self.c) and self.inner.rule.is_real_rule()

    def params(self):
        return {"c": _exact_to_json(self.c), "inner": series_to_json(self.inner)}

    def label(self):
        return f"scale({self.inner.label()})"


class ProductRule(Rule):
    """Cauchy product: c_n = sum_{k<=n} a_k b_{n-k}."""

    json_name = "product"

    def __init__(self, s: "SeriesSpec", t: "SeriesSpec"):
        self.s = s
        self.t = t
        self.certified_tail = s.rule.certified_tail and t.rule.certified_tail

    def exact(self, n):
        out: Exact = Fraction(0)
        for k in range(n + 1):
            a = self.s.coeff(k)
            if ex_is_zero(a):
                continue
            b = self.t.coeff(n - k)
            if ex_is_zero(b):
                continue
            out = ex_add(out, ex_mul(a, b))
        return out

    def degree(self):
        ds, dt = self.s.degree(), self.t.degree()
        if ds is None or dt is None:
            return None
        if ds < 0 or dt < 0:
            return -1
        return ds + dt

    def tail_abs_iv(self, x_abs, N):
        # split n = k + j > N into k > N/2 or j > N/2 (overcounts, stays valid)
        half = N // 2
        fs = _full_abs_sum_iv(self.s, x_abs)
        ft = _full_abs_sum_iv(self.t, x_abs)
        ts = self.s.rule.tail_abs_iv(x_abs, half)
        tt = self.t.rule.tail_abs_iv(x_abs, half)
        if None in (fs, ft, ts, tt):
            return None
        return ts * ft + fs * tt

    def is_real_rule(self):
        return self.s.rule.is_real_rule() and self.t.rule.is_real_rule()

    def params(self):
        return {"factors": [series_to_json(self.s), series_to_json(self.t)]}

    def label(self):
        return f"({self.s.label()} * {self.t.label()})"


def _full_abs_sum_iv(spec: "SeriesSpec", x_abs, head=16):
    tail = spec.rule.tail_abs_iv(x_abs, head)
    if tail is None:
        return None
    total = iv.mpf(0)
    for n in range(head + 1):
        a2 = ex_abs2(spec.coeff(n))
        total += iv.sqrt(to_iv(a2)) * x_abs ** n
    return total + tail


# ---------------------------------------------------------------------------
# SeriesSpec


class SeriesSpec:
    """Immutable coefficient rule with a synchronized exact-coefficient cache."""

    def __init__(self, rule: Rule):
        self.rule = rule
        self._cache = {}
        self._lock = threading.Lock()

    def coeff(self, n: int) -> Exact:
        if n < 0:
            raise ValueError("coefficient index must be >= 0")
        v = self._cache.get(n)
        if v is None:
            v = self.rule.exact(n)
            with self._lock:
                self._cache.setdefault(n, v)
        return v

    def coeff_approx(self, n: int, prec: int = DEFAULT_PREC):
        """(value, error) with value an mpf/mpc at ``prec`` bits."""
        v = self.coeff(n)
        with mp.workprec(prec + 8):
            if isinstance(v, QC) and not v.is_real:
                val = to_mpc(v, prec + 8)
            else:
                val = to_mpf(v, prec + 8)
            err = mp.fabs(val) * mp.mpf(2) ** (1 - prec)
        return val, err

    def is_zero(self, n: int) -> bool:
        return ex_is_zero(self.coeff(n))

    def sign(self, n: int) -> int:
        hint = self.rule.sign_exact(n)
        if hint is not None:
            return hint
        v = self.coeff(n)
        if not ex_is_real(v):
            raise ComplexCoefficientsError(
                f"coefficient {n} of {self.label()} is not real"
            )
        return ex_sign(v)

    def abs2(self, n: int):
        return ex_abs2(self.coeff(n))

    @property
    def is_real(self) -> bool:
        return self.rule.is_real_rule()

    def degree(self) -> Optional[int]:
        return self.rule.degree()

    def has_tail_bound(self) -> bool:
        return self.rule.certified_tail

    def tail_bound(self, x_abs, N: int, prec: int = 64):
        """Certified mpf upper bound on sum_{n>N} |a_n| |x|^n, or None."""
        with iv_workprec(prec + 16):
            xa = to_iv(x_abs)
            if iv_lo(xa) < 0:
                xa = abs(xa)
            t = self.rule.tail_abs_iv(xa, N)
        if t is None:
            return None
        return iv_hi(t)

    def turan_global(self) -> Optional[Fraction]:
        """Exact chi valid for every index, when the rule guarantees one."""
        fn = getattr(self.rule, "turan_global", None)
        return fn() if fn is not None else None

    def label(self) -> str:
        return self.rule.label()

    def __repr__(self):
        return f"SeriesSpec({self.label()})"


@dataclass(frozen=True)
class TailBound:
    """Caller-facing tail bound record: start index plus the bound function."""

    start_index: int
    bound_at: Callable[[object, int], object]


def tail_bound_of(s: SeriesSpec, prec: int = 64) -> Optional[TailBound]:
    if not s.has_tail_bound():
        return None
    return TailBound(0, lambda x_abs, N: s.tail_bound(x_abs, N, prec))


# constructors

def explicit(coeffs) -> SeriesSpec:
    return SeriesSpec(ExplicitRule(coeffs))


def gaussian(lam=1, m: int = 0) -> SeriesSpec:
    return SeriesSpec(GaussianRule(lam, m))


def poly_gaussian(poly, n: int) -> SeriesSpec:
    return SeriesSpec(PolyGaussianRule(poly, n))


def sin_series() -> SeriesSpec:
    return SeriesSpec(SinRule())


def cos_series() -> SeriesSpec:
    return SeriesSpec(CosRule())


def sin_scaled(m: int) -> SeriesSpec:
    return SeriesSpec(SinScaledRule(m))


def exp_neg_2m(m: int) -> SeriesSpec:
    return SeriesSpec(ExpNeg2mRule(m))


def exp_neg_half_2m(m: int) -> SeriesSpec:
    return SeriesSpec(ExpNegHalf2mRule(m))


def exp_neg_sq_over_m(m: int) -> SeriesSpec:
    return SeriesSpec(ExpNegSqOverMRule(m))


def theta_series(rho=None, signs="all_plus", *, rho2=None) -> SeriesSpec:
    if isinstance(signs, str):
        signs = SignRule(signs)
    return SeriesSpec(ThetaRule(rho=rho, signs=signs, rho2=rho2))


def bell_egf() -> SeriesSpec:
    return SeriesSpec(BellEGFRule())


def user_tail(head, fn=None, tail_bound=None, name="user_tail") -> SeriesSpec:
    return SeriesSpec(UserTailRule(head, fn, tail_bound, name))


def coeff(s: SeriesSpec, n: int, precision: Optional[int] = None):
    """Coefficient a_n: exact by default, (value, error) at a precision."""
    if precision is None:
        return s.coeff(n)
    return s.coeff_approx(n, precision)


# ---------------------------------------------------------------------------
# arithmetic


def add(s: SeriesSpec, t: SeriesSpec) -> SeriesSpec:
    if isinstance(s.rule, ExplicitRule) and isinstance(t.rule, ExplicitRule):
        n = max(len(s.rule.coeffs), len(t.rule.coeffs))
        return explicit([ex_add(s.coeff(i), t.coeff(i)) for i in range(n)])
    return SeriesSpec(SumRule(s, t))


def scale(s: SeriesSpec, c) -> SeriesSpec:
    c = _coerce_exact(c)
    if isinstance(s.rule, ExplicitRule):
        return explicit([ex_mul(c, v) for v in s.rule.coeffs])
    return SeriesSpec(ScaledRule(s, c))


def cauchy_product(s: SeriesSpec, t: SeriesSpec) -> SeriesSpec:
    if isinstance(s.rule, ExplicitRule) and isinstance(t.rule, ExplicitRule):
        a, b = s.rule.coeffs, t.rule.coeffs
        if not a or not b:
            return explicit([])
        out = [Fraction(0)] * (len(a) + len(b) - 1)
        for i, ai in enumerate(a):
            if ex_is_zero(ai):
                continue
            for j, bj in enumerate(b):
                if ex_is_zero(bj):
                    continue
                out[i + j] = ex_add(out[i + j], ex_mul(ai, bj))
        return explicit(out)
    return SeriesSpec(ProductRule(s, t))


# ---------------------------------------------------------------------------
# evaluation


@dataclass
class EvalResult:
    value: object          # mpf or mpc at the requested precision
    error: object          # mpf: |value - f(x)| <= error when certified
    certified: bool        # tail included?  False means rounding-only bound
    N: int
    precision: int
    x_used: object = None  # the exact dyadic point actually evaluated
    exact_partial: Optional[Exact] = None
    note: str = ""


def _exact_point(x):
    if isinstance(x, (int, Fraction, QuadVal)):
        return x
    if isinstance(x, QC):
        return x
    if isinstance(x, mpmath.mpf):
        from .bigreal import mpf_to_fraction

        return mpf_to_fraction(x)
    if isinstance(x, mpmath.mpc):
        from .bigreal import mpf_to_fraction

        return QC(mpf_to_fraction(x.real), mpf_to_fraction(x.imag))
    if isinstance(x, float):
        return Fraction(x)
    if isinstance(x, complex):
        return QC(Fraction(x.real), Fraction(x.imag))
    if isinstance(x, str):
        return parse_rational(x)
    raise ValueError(f"cannot interpret evaluation point {x!r}")


_EXACT_EVAL_MAX_N = 4096


def evaluate(s: SeriesSpec, x, N: int, prec: int = DEFAULT_PREC,
             method: str = "auto") -> EvalResult:
    """Certified truncated evaluation of f at x.

    Returns value and an error bound combining rounding with the rule's tail
    majorant when one exists (``certified=True``); otherwise the bound covers
    rounding only and the result is flagged truncation-uncertified.

    ``method="exact"`` sums the truncation in exact arithmetic (x must be
    exact); ``"horner"`` works in floating point at an elevated working
    precision with a running-error majorant; ``"auto"`` picks.
    """
    if N < 0:
        raise ValueError("N must be >= 0")
    xe = _exact_point(x)

    # products of entire functions evaluate through their factors (N applies
    # to each factor); much cheaper than convolving N coefficients
    if method == "horner" and isinstance(s.rule, ProductRule):
        ra = evaluate(s.rule.s, x, N, prec + 8, "horner")
        rb = evaluate(s.rule.t, x, N, prec + 8, "horner")
        with mp.workprec(prec + 16):
            val = ra.value * rb.value
            err = (mp.fabs(ra.value) * rb.error + mp.fabs(rb.value) * ra.error
                   + ra.error * rb.error)
        with mp.workprec(prec):
            val = +val
            err = +err + mp.fabs(val) * mp.mpf(2) ** (2 - prec)
        cert = ra.certified and rb.certified
        return EvalResult(
            value=val, error=err, certified=cert, N=N, precision=prec,
            x_used=ra.x_used,
            note="product evaluated through factors"
                 + ("" if cert else "; truncation-uncertified"),
        )

    if method == "auto":
        method = "exact" if N <= _EXACT_EVAL_MAX_N else "horner"

    # absolute value of the point, as an exact-or-interval quantity
    with iv_workprec(prec + 16):
        x_abs2 = ex_abs2(xe)
        x_abs_iv = iv.sqrt(to_iv(x_abs2))
        tail_iv = s.rule.tail_abs_iv(x_abs_iv, N)
    tail = iv_hi(tail_iv) if tail_iv is not None else None

    if method == "exact":
        total: Exact = Fraction(0)
        xp: Exact = Fraction(1)
        for n in range(N + 1):
            a = s.coeff(n)
            if not ex_is_zero(a):
                total = ex_add(total, ex_mul(a, xp))
            if n < N:
                xp = ex_mul(xp, xe)
        with mp.workprec(prec + 8):
            if isinstance(total, QC) and not total.is_real:
                val = to_mpc(total, prec + 8)
            else:
                val = to_mpf(total, prec + 8)
            rnd = mp.fabs(val) * mp.mpf(2) ** (2 - prec)
            err = rnd + (tail if tail is not None else mp.mpf(0))
            ensure_finite(val, err)
            return EvalResult(
                value=+val, error=+err, certified=tail is not None,
                N=N, precision=prec, x_used=xe, exact_partial=total,
                note="" if tail is not None else "truncation-uncertified",
            )

    # floating Horner with a certified running-error majorant.  The majorant
    # is crude (bit-length arithmetic), which only costs a few extra working
    # bits; working precision absorbs the term envelope above the result.
    w = prec + 48 + 2 * bitlen(N + 2)
    lx2 = _log2_abs_upper(x_abs2)
    lx_up = 0 if lx2 is None else (lx2 + 1) // 2  # upper bound on log2|x|
    max_term_log2 = None
    for n in range(N + 1):
        la = _log2_abs_upper(s.coeff(n))
        if la is None:
            continue
        t = la + n * lx_up
        if max_term_log2 is None or t > max_term_log2:
            max_term_log2 = t
    if max_term_log2 is None:
        max_term_log2 = 0
    S_log2 = max_term_log2 + bitlen(N + 1)  # sum of N+1 terms
    w += max(0, S_log2)
    if w > 4_000_000:
        raise RangeOverflowError(
            f"evaluation would need ~{w} working bits (term envelope "
            f"2^{S_log2}); evaluate at a smaller |x|"
        )
    with mp.workprec(w):
        complex_x = isinstance(xe, QC) and not xe.is_real
        xv = to_mpc(xe, w) if complex_x else to_mpf(xe, w)
        acc = mp.mpc(0) if complex_x else mp.mpf(0)
        any_complex = complex_x
        for n in range(N, -1, -1):
            a = s.coeff(n)
            if isinstance(a, QC) and not a.is_real:
                if not any_complex:
                    acc = mp.mpc(acc)
                    xv = mp.mpc(xv)
                    any_complex = True
                av = to_mpc(a, w)
            else:
                av = to_mpf(a, w)
            acc = acc * xv + av
        # 8(N+2) * 2^(1-w) * S_up with S_up <= 2^S_log2, as an exact power of 2
        rnd = mp.mpf(2) ** (4 + bitlen(N + 2) + 1 - w + S_log2)
        err = rnd + (tail if tail is not None else mp.mpf(0))
        ensure_finite(acc, err)
    with mp.workprec(prec):
        val = +acc
        err = +err + mp.fabs(val) * mp.mpf(2) ** (1 - prec)
    return EvalResult(
        value=val, error=err, certified=tail is not None,
        N=N, precision=prec, x_used=xe,
        note="" if tail is not None else "truncation-uncertified",
    )


def _exact_pow(x: Exact, n: int) -> Exact:
    if n == 0:
        return Fraction(1)
    out = x
    # square-and-multiply over the exact ops
    result = None
    base = x
    e = n
    while e:
        if e & 1:
            result = base if result is None else ex_mul(result, base)
        e >>= 1
        if e:
            base = ex_mul(base, base)
    return result


def estimate_peak_log2(s: SeriesSpec, x_abs, budget_bits: Optional[int] = None,
                       horizon: int = 1 << 22) -> Optional[int]:
    """Rough upper estimate of max_n log2 |a_n x^n| via bit-length arithmetic.

    Returns None as soon as the estimate exceeds ``budget_bits`` (evaluating
    there would be unaffordable).  Scans until the term estimate has dropped
    64 in a row past the peak.
    """
    x2 = ex_abs2(_exact_point(x_abs))
    lx2 = _log2_abs_upper(x2)
    lx_up = 0 if lx2 is None else (lx2 + 1) // 2
    deg = s.degree()
    best = None
    drops = 0
    prev = None
    for n in range(horizon):
        la = _log2_abs_upper(s.coeff(n))
        if la is not None:
            t = la + n * lx_up
            if budget_bits is not None and t > budget_bits:
                return None
            if best is None or t > best:
                best = t
            if prev is not None and t < prev:
                drops += 1
                if drops > 64 and deg is None:
                    break
            else:
                drops = 0
            prev = t
        if deg is not None and n >= deg:
            break
    return best if best is not None else 0


def choose_truncation(s: SeriesSpec, x_abs, abs_target, prec: int = 64,
                      start: int = 8, cap: int = 1 << 22) -> int:
    """Smallest power-of-two-ish N with certified tail below ``abs_target``."""
    if not s.has_tail_bound():
        raise BoundedSeriesError(f"{s.label()} carries no tail bound")
    N = start
    target = to_mpf(abs_target, 64)
    while N <= cap:
        t = s.tail_bound(x_abs, N, prec)
        if t is not None and t <= target:
            return N
        N *= 2
    raise RangeOverflowError(
        f"no truncation below {cap} brings the tail under {abs_target}"
    )


# ---------------------------------------------------------------------------
# norms


@dataclass
class L1Result:
    partial: object                 # mpf
    partial_error: object           # mpf bound on |partial - sum_{n<=N}|a_n||
    tail_bound: Optional[object]    # mpf or None ("unknown")
    N: int
    exact: Optional[Exact] = None   # exact partial when representable


def l1_norm(s: SeriesSpec, N: int, prec: int = DEFAULT_PREC) -> L1Result:
    """Partial l1 mass sum_{n<=N} |a_n| with a certified tail when available."""
    exact_total: Optional[Exact] = Fraction(0)
    for n in range(N + 1):
        v = s.coeff(n)
        if isinstance(v, QC) and not v.is_real:
            a2 = v.abs2()
            r = exact_sqrt(a2)
            if r is None:
                exact_total = None
                break
            exact_total = ex_add(exact_total, r)
        elif isinstance(v, QuadVal):
            exact_total = ex_add(exact_total, abs(v))
        else:
            exact_total = ex_add(exact_total, abs(Fraction(v)))
    tail = s.tail_bound(1, N, prec) if s.has_tail_bound() else None
    if exact_total is not None:
        with mp.workprec(prec + 8):
            val = to_mpf(exact_total, prec + 8)
            err = mp.fabs(val) * mp.mpf(2) ** (2 - prec)
            return L1Result(+val, +err, tail, N, exact=exact_total)
    with iv_workprec(prec + 16):
        total = iv.mpf(0)
        for n in range(N + 1):
            total += iv.sqrt(to_iv(s.abs2(n)))
        with mp.workprec(prec + 16):
            mid = (iv_lo(total) + iv_hi(total)) / 2
            rad = (iv_hi(total) - iv_lo(total)) / 2 + mid * mp.mpf(2) ** (2 - prec)
    return L1Result(mid, rad, tail, N)


@dataclass
class SupNormGrid:
    points: int = 129
    refine_rounds: int = 48
    radius: Fraction = Fraction(8)
    trunc_target_bits: int = 96


@dataclass
class SupNormResult:
    lower: object      # certified lower bound on sup |f|
    at: object         # where it was attained
    certified: bool
    note: str = "certified lower bound only; upper bounds are out of scope"


def sup_norm_estimate(s: SeriesSpec, domain="R",
                      grid: Optional[SupNormGrid] = None,
                      prec: int = DEFAULT_PREC) -> SupNormResult:
    """Certified lower bound for sup |f| over an interval or the whole line.

    Evaluates on a grid, refines around the best point, and reports
    max(|value| - error).  Never claims an upper bound.
    """
    grid = grid or SupNormGrid()
    if domain == "R":
        lo, hi = -Fraction(grid.radius), Fraction(grid.radius)
    else:
        lo, hi = Fraction(parse_rational(domain[0])), Fraction(parse_rational(domain[1]))
        if lo > hi:
            raise ValueError("empty domain")

    target = Fraction(1, 2 ** grid.trunc_target_bits)
    xa = max(abs(lo), abs(hi))

    if s.has_tail_bound():
        N = choose_truncation(s, xa, target, prec=64)
        certified = True
    else:
        N = 256
        certified = False

    def certified_abs(x: Fraction):
        r = evaluate(s, x, N, prec)
        with mp.workprec(prec + 8):
            return mp.fabs(r.value) - r.error

    best_x = lo
    best = certified_abs(lo)
    pts = max(grid.points, 3)
    for i in range(1, pts):
        x = lo + (hi - lo) * Fraction(i, pts - 1)
        v = certified_abs(x)
        if v > best:
            best, best_x = v, x
    h = (hi - lo) / (pts - 1) if pts > 1 else (hi - lo)
    for _ in range(grid.refine_rounds):
        h = h / 2
        for x in (best_x - h, best_x + h):
            if x < lo or x > hi:
                continue
            v = certified_abs(x)
            if v > best:
                best, best_x = v, x
    with mp.workprec(prec):
        best = max(best, mp.mpf(0))
    return SupNormResult(best, to_mpf(best_x, prec), certified)


# ---------------------------------------------------------------------------
# head recovery from the tail


@dataclass
class HeadRecovery:
    value: object                 # best estimate of a_n (mpf/mpc)
    status: str                   # "converged" or "no-limit"
    raw: list                     # (x, -T_n(x)) along the schedule
    differences: list             # successive raw differences (mpf)
    eval_error: object            # certified bound on schedule-value errors
    est_error: object             # empirical error estimate of `value`
    order: int                    # extrapolation order actually used
    note: str = ""


def recover_head(s: SeriesSpec, n: int, x_schedule: Sequence, prec: int = DEFAULT_PREC,
                 extrapolation_order: Optional[int] = None) -> HeadRecovery:
    """Recover a_n of a bounded series from its tail coefficients only.

    Uses the identity a_n = -lim_{|x|->inf} sum_{k>=1} a_{n+k} x^k.  Raw
    schedule values converge like 1/x, so the power part of the error
    (an exact polynomial in 1/x of degree n) is removed by Lagrange
    extrapolation at 1/x = 0 with exact rational weights; certified
    evaluation errors propagate through the weights.

    Boundedness of the series is the caller's assertion: when the schedule
    values do not settle, the result is flagged "no-limit" instead.
    """
    if n < 1:
        raise ValueError("head recovery needs n >= 1")
    sched = [parse_rational(x) if not isinstance(x, (int, Fraction)) else Fraction(x)
             for x in x_schedule]
    if len(sched) < 2:
        raise ValueError("schedule needs at least two points")
    if any(b <= a for a, b in zip(sched, sched[1:])):
        raise ValueError("schedule must be strictly increasing")
    if sched[0] <= 0:
        raise ValueError("schedule must be positive")

    shifted = SeriesSpec(ShiftedRule(s, n + 1))
    abs_target = Fraction(1, 2 ** (prec + 16))

    raw = []
    errs = []
    complex_any = False
    for xq in sched:
        if shifted.has_tail_bound():
            NN = choose_truncation(shifted, xq, abs_target, prec=64)
        else:
            NN = 512
        r = evaluate(shifted, xq, NN, prec + 32, method="horner")
        with mp.workprec(prec + 32):
            xv = to_mpf(xq, prec + 32)
            val = -(xv * r.value)
            e = abs(xv) * r.error
        if isinstance(val, mpmath.mpc):
            complex_any = True
        raw.append(val)
        errs.append(e)
        if not r.certified:
            pass  # surfaced via note below

    def _lagrange_at_zero(nodes, values, w_prec):
        # exact rational weights for extrapolation to 1/x = 0
        ts = [Fraction(1, xq) for xq in nodes]
        est = mp.mpc(0) if complex_any else mp.mpf(0)
        amp = Fraction(0)
        for i, ti in enumerate(ts):
            w_ = Fraction(1)
            for j, tj in enumerate(ts):
                if j != i:
                    w_ *= tj / (tj - ti)
            est = est + to_mpf(w_, w_prec) * values[i]
            amp += abs(w_)
        return est, amp

    with mp.workprec(prec + 32):
        diffs = [mp.fabs(raw[i + 1] - raw[i]) for i in range(len(raw) - 1)]
        eval_err = max(errs)

        order = extrapolation_order if extrapolation_order is not None else n
        P = max(0, min(order, len(sched) - 2))

        value = raw[-1]
        est_error = (diffs[-1] if diffs else mp.mpf(0)) + eval_err
        used_order = 0
        converged = False

        if P >= 1:
            # full-order extrapolation on two shifted node windows: both are
            # exact for a genuine power-law error, so their gap diagnoses the
            # model (and measures the non-power leftover)
            ext_a, amp_a = _lagrange_at_zero(sched[-(P + 1):], raw[-(P + 1):],
                                             prec + 32)
            ext_b, _ = _lagrange_at_zero(sched[-(P + 2):-1], raw[-(P + 2):-1],
                                         prec + 32)
            amp_err = to_mpf(amp_a, prec + 32) * eval_err
            model_err = mp.fabs(ext_a - ext_b)
            scale = max(mp.mpf(1), mp.fabs(ext_a))
            if model_err <= scale * mp.mpf(2) ** (-max(32, prec // 8)):
                converged = True
                used_order = P
                value = ext_a
                est_error = model_err + amp_err

        if not converged and diffs:
            # raw-limit fallback: accept when the difference envelope shrinks
            if len(diffs) >= 4:
                half = len(diffs) // 2
                head = max(diffs[:half])
                tail_env = max(diffs[half:])
                shrinking = tail_env <= mp.mpf("0.75") * head + 64 * eval_err
            else:
                scale = max(mp.fabs(raw[-1]), mp.mpf(1))
                shrinking = diffs[-1] <= mp.mpf("0.05") * scale
            if shrinking:
                converged = True
                value = raw[-1]
                est_error = diffs[-1] + eval_err

    status = "converged" if converged else "no-limit"
    with mp.workprec(prec):
        value = +value
    return HeadRecovery(
        value=value, status=status,
        raw=list(zip([to_mpf(xq, prec) for xq in sched], raw)),
        differences=diffs, eval_error=eval_err, est_error=est_error,
        order=used_order,
        note="" if status == "converged" else
        "schedule differences are not shrinking: series not bounded, or schedule/precision insufficient",
    )


# ---------------------------------------------------------------------------
# JSON serialization


def _coerce_exact(c) -> Exact:
    if isinstance(c, (int, Fraction, QC, QuadVal)):
        return c if not isinstance(c, int) else Fraction(c)
    if isinstance(c, str):
        return parse_rational(c)
    if isinstance(c, complex):
        if c.imag == 0:
            return Fraction(c.real)
        return QC(Fraction(c.real), Fraction(c.imag))
    if isinstance(c, float):
        return Fraction(c)
    raise ValueError(f"cannot coerce {c!r} to an exact coefficient")


def _exact_to_json(c: Exact):
    if isinstance(c, QC):
        if c.is_real:
            return format_rational(c.re)
        return [format_rational(c.re), format_rational(c.im)]
    if isinstance(c, QuadVal):
        if c.is_rational:
            return format_rational(c.a)
        return {"a": format_rational(c.a), "b": format_rational(c.b),
                "d": format_rational(c.d)}
    return format_rational(Fraction(c))


def _exact_from_json(obj) -> Exact:
    if isinstance(obj, str):
        return parse_rational(obj)
    if isinstance(obj, list) and len(obj) == 2:
        return QC(parse_rational(obj[0]), parse_rational(obj[1]))
    if isinstance(obj, dict) and "d" in obj:
        return QuadVal(parse_rational(obj["a"]), parse_rational(obj["b"]),
                       parse_rational(obj["d"]))
    if isinstance(obj, int):
        return Fraction(obj)
    raise ValueError(f"bad exact value {obj!r}")


def series_to_json(s: SeriesSpec) -> dict:
    rule = s.rule
    if isinstance(rule, UserTailRule):
        raise BoundedSeriesError("user_tail rules are not serializable")
    out = {"rule": rule.json_name}
    out.update(rule.params())
    return out


def series_from_json(obj: dict) -> SeriesSpec:
    if not isinstance(obj, dict) or "rule" not in obj:
        raise ValueError("series spec must be an object with a 'rule' key")
    kind = obj["rule"]
    if kind == "explicit":
        return explicit([_exact_from_json(c) for c in obj["coeffs"]])
    if kind == "gaussian":
        return gaussian(obj.get("lam", "1"), int(obj.get("m", 0)))
    if kind == "poly_gaussian":
        return poly_gaussian([_exact_from_json(c) for c in obj["poly"]], int(obj["n"]))
    if kind == "sin":
        return sin_series()
    if kind == "cos":
        return cos_series()
    if kind == "sin_scaled":
        return sin_scaled(int(obj["m"]))
    if kind == "exp_neg_2m":
        return exp_neg_2m(int(obj["m"]))
    if kind == "exp_neg_half_2m":
        return exp_neg_half_2m(int(obj["m"]))
    if kind == "exp_neg_sq_over_m":
        return exp_neg_sq_over_m(int(obj["m"]))
    if kind == "theta":
        rho = obj["rho"]
        signs = SignRule.from_json(obj.get("signs", "all_plus"))
        if isinstance(rho, dict) and "sqrt" in rho:
            return theta_series(rho2=parse_rational(rho["sqrt"]), signs=signs)
        return theta_series(rho=parse_rational(rho), signs=signs)
    if kind == "bell_egf":
        return bell_egf()
    if kind == "shifted":
        return SeriesSpec(ShiftedRule(series_from_json(obj["inner"]), int(obj["k"])))
    if kind == "alternate_flip":
        return alternate_flip(series_from_json(obj["inner"]))
    if kind == "left_extend":
        return SeriesSpec(LeftExtendRule(series_from_json(obj["inner"]),
                                         _exact_from_json(obj["c"])))
    if kind == "sum":
        a, b = obj["terms"]
        return SeriesSpec(SumRule(series_from_json(a), series_from_json(b)))
    if kind == "scaled":
        return SeriesSpec(ScaledRule(series_from_json(obj["inner"]),
                                     _exact_from_json(obj["c"])))
    if kind == "product":
        a, b = obj["factors"]
        return SeriesSpec(ProductRule(series_from_json(a), series_from_json(b)))
    raise ValueError(f"unknown rule {kind!r}")
