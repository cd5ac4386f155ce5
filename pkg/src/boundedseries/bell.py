"""Complementary Bell numbers, exactly.

b_n is n! times the coefficient of x^n in exp(1 - exp(x)); equivalently the
signed difference between even- and odd-block set partition counts.  The
primary generator is the binomial recurrence

    b_0 = 1,   b_{n+1} = -sum_{k=0}^{n} C(n,k) b_k

(obtained from f' = -e^x f), with binomial rows streamed Pascal-style so
everything stays in exact integers.  A second, independent derivation via the
exponential-of-series recurrence backs the cross-check API.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Tuple

from .signruns import SignRunProfile, sign_run_profile


@dataclass(frozen=True)
class BellSequence:
    """b_0..b_N as exact integers, plus how they were derived."""

    values: Tuple[int, ...]
    source: str = "binomial-recurrence"

    @property
    def N(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, n: int) -> int:
        return self.values[n]


def extend_complementary_bell(values: List[int], n: int) -> List[int]:
    """Extend a prefix [b_0..] to cover index n (recomputes rows as needed)."""
    if not values or values[0] != 1:
        values = [1]
    target = max(n + 1, 2 * len(values))
    return _recurrence(target - 1)


def _recurrence(N: int) -> List[int]:
    b = [1]
    row = [1]  # C(n, .) for the current n
    for n in range(N):
        # b_{n+1} from the completed row C(n, 0..n)
        s = 0
        for k in range(n + 1):
            s += row[k] * b[k]
        b.append(-s)
        # advance the row to C(n+1, .)
        row.append(1)
        for k in range(n, 0, -1):
            row[k] += row[k - 1]
    return b


def complementary_bell(N: int) -> BellSequence:
    """Exact b_0..b_N."""
    if N < 0:
        raise ValueError("N must be >= 0")
    return BellSequence(tuple(_recurrence(N)))


def complementary_bell_egf(N: int) -> BellSequence:
    """Independent derivation: coefficient extraction from exp(1 - exp(x)).

    With u(x) = 1 - exp(x) (so u_0 = 0), E = exp(u) satisfies E' = u' E,
    giving n E_n = sum_{k=1}^{n} k u_k E_{n-k} in exact rationals; then
    b_n = n! E_n.  Used to cross-check the binomial recurrence.
    """
    if N < 0:
        raise ValueError("N must be >= 0")
    u = [Fraction(0)] + [Fraction(-1, math.factorial(k)) for k in range(1, N + 1)]
    E = [Fraction(1)]
    for n in range(1, N + 1):
        acc = Fraction(0)
        for k in range(1, n + 1):
            if u[k]:
                acc += k * u[k] * E[n - k]
        E.append(acc / n)
    vals = []
    for n, e in enumerate(E):
        v = e * math.factorial(n)
        if v.denominator != 1:
            raise ArithmeticError(f"EGF extraction gave a non-integer b_{n}")
        vals.append(v.numerator)
    return BellSequence(tuple(vals), source="egf-exp-recurrence")


def wilf_scan(N: int) -> List[int]:
    """All n <= N with b_n = 0 (exact zero detection)."""
    seq = complementary_bell(N)
    return [n for n, v in enumerate(seq.values) if v == 0]


@dataclass(frozen=True)
class BellRunRecord:
    start: int
    length: int
    sign: int


def bell_sign_runs(N: int):
    """Run decomposition of sign(b_n) plus the record-run growth table.

    Returns (profile, records): records lists each run that set a new
    same-sign length record, in order of appearance.  Evidence tabulation
    only, not a proof of anything asymptotic.
    """
    seq = complementary_bell(N)
    signs = [(v > 0) - (v < 0) for v in seq.values]
    profile = sign_run_profile(signs, start=0)
    records = []
    best = 0
    for run in profile.runs:
        if run.sign != 0 and run.length > best:
            best = run.length
            records.append(BellRunRecord(run.start, run.length, run.sign))
    return profile, records


def turan_ratio(n: int, seq: BellSequence = None) -> Fraction:
    """Exact |n * b_{n+1} * b_{n-1} / ((n+1) * b_n^2)|.

    Undefined where b_n = 0 (raises ZeroDivisionError with the index; this
    happens at n = 2).
    """
    if n < 1:
        raise ValueError("ratio needs n >= 1")
    if seq is None or seq.N < n + 1:
        seq = complementary_bell(n + 1)
    bn = seq[n]
    if bn == 0:
        raise ZeroDivisionError(f"ratio undefined at n = {n}: b_n = 0")
    return abs(Fraction(n * seq[n + 1] * seq[n - 1], (n + 1) * bn * bn))


@dataclass
class RatioRow:
    n: int
    ratio: Fraction
    running_max: Fraction
    running_min: Fraction


def turan_ratio_table(N: int) -> Tuple[List[RatioRow], List[int]]:
    """Ratio rows for 1 <= n <= N with running extrema; plus undefined indices.

    The running max column is the limsup evidence, the running min column the
    liminf evidence; no asymptotic claim is made.
    """
    seq = complementary_bell(N + 1)
    rows: List[RatioRow] = []
    undefined: List[int] = []
    rmax = None
    rmin = None
    for n in range(1, N + 1):
        if seq[n] == 0:
            undefined.append(n)
            continue
        r = turan_ratio(n, seq)
        rmax = r if rmax is None else max(rmax, r)
        rmin = r if rmin is None else min(rmin, r)
        rows.append(RatioRow(n, r, rmax, rmin))
    return rows, undefined
