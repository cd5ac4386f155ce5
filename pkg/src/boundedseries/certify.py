"""Constructive unboundedness certificates.

A certificate is a self-contained, re-checkable record: witness points
x_m = |a_{m-1}/a_{m+1}|^{1/2}, an exactly-summed coefficient window around
each m, and a tail bound of run-weight type

    sum_{p>K} chi^{p^2/2} * |a_m x_m^m|

valid whenever the concavity inequality |a_{n+1}a_{n-1}| <= chi |a_n|^2 holds
(with nonzero coefficients) along the domination chains.  Every emitted
``certified_lower`` is a true lower bound on |f(x_m)|: the exact window sum
minus the certified tail, rounded downward.

Soundness never rests on the branch heuristics: branches only steer the
search for m.  The tail needs the concavity hypothesis at every index, so a
certificate carries either a rule-global guarantee (the theta family knows
its ratio is exactly rho^2 with no zero coefficients) or a finite exact
verification plus an explicit caller assertion.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple, Union

import mpmath
from mpmath import iv, mp

from .bigreal import (
    DEFAULT_PREC,
    BoundedSeriesError,
    iv_hi,
    iv_lo,
    iv_workprec,
    mpf_to_fraction,
    mpf_to_triple,
    to_iv,
    to_mpf,
    triple_to_mpf,
)
from .exactnum import (
    ExactArithmeticError,
    QC,
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
from .series import (
    SeriesSpec,
    _exact_to_json,
    _exact_from_json,
    alternate_flip,
    series_from_json,
    series_to_json,
)
from .turan import (
    ThetaPsi,
    _as_exact_chi,
    run_weight_tail,
    sign_runs,
    theta_psi_retry,
)

CERTIFICATE_VERSION = 1


class WindowPreconditionError(BoundedSeriesError):
    pass


class InconclusiveError(BoundedSeriesError):
    """The certifier could not (soundly) certify; carries diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])


BRANCHES = ("long-run", "short-runs", "complex-psi0")

_RW_CACHE: dict = {}


def _run_weight_tail_cached(chi, K: int, prec: int):
    key = None
    if isinstance(chi, Fraction):
        key = (chi, K, prec)
        hit = _RW_CACHE.get(key)
        if hit is not None:
            return hit
    val = run_weight_tail(chi, K, prec)
    if key is not None:
        if len(_RW_CACHE) > 512:
            _RW_CACHE.clear()
        _RW_CACHE[key] = val
    return val


@dataclass
class Witness:
    m: int
    branch: str
    window: Tuple[int, int]
    x_sq: object                      # exact y = x_m^2
    x_exact: Optional[object]         # exact x_m when representable
    x_mpf: object
    window_sum_exact: Optional[object]
    window_abs_lo: object             # certified mpf lower bound on |window sum|
    window_abs_hi: object
    peak_hi: object                   # upper bound on |a_m x_m^m|
    tail_offset: int                  # K: tail starts at offset K past m
    tail_coeff_hi: object             # upper bound on the run-weight factor
    tail_bound: object                # mpf
    certified_lower: object           # mpf >= 0
    two_sided_tail: bool

    def to_json(self):
        return {
            "m": self.m,
            "branch": self.branch,
            "window": [self.window[0], self.window[1]],
            "x_sq": _exact_to_json(self.x_sq) if self.x_sq is not None else None,
            "x": _exact_to_json(self.x_exact) if self.x_exact is not None
                 else mpf_to_triple(self.x_mpf),
            "x_is_exact": self.x_exact is not None,
            "window_sum": (_exact_to_json(self.window_sum_exact)
                           if self.window_sum_exact is not None else None),
            "window_abs": [mpf_to_triple(self.window_abs_lo),
                           mpf_to_triple(self.window_abs_hi)],
            "peak_upper": mpf_to_triple(self.peak_hi),
            "tail_offset": self.tail_offset,
            "tail_coeff_upper": mpf_to_triple(self.tail_coeff_hi),
            "tail_bound": mpf_to_triple(self.tail_bound),
            "certified_lower": mpf_to_triple(self.certified_lower),
            "two_sided_tail": self.two_sided_tail,
        }


@dataclass
class Certificate:
    series: SeriesSpec
    chi: object
    branch: str
    theta: Union[int, float]
    psi: int
    conclusion_threshold: Fraction
    witnesses: List[Witness]
    turan_scope: dict
    flipped: bool
    precision: int
    version: int = CERTIFICATE_VERSION

    def to_json(self) -> dict:
        return {
            "format": "boundedseries-certificate",
            "version": self.version,
            "series": series_to_json(self.series),
            "chi": format_rational(self.chi) if isinstance(self.chi, Fraction)
                   else _exact_to_json(self.chi),
            "branch": self.branch,
            "theta": "inf" if self.theta == math.inf else int(self.theta),
            "psi": int(self.psi),
            "conclusion_threshold": format_rational(self.conclusion_threshold),
            "witnesses": [w.to_json() for w in self.witnesses],
            "turan_scope": self.turan_scope,
            "flipped": self.flipped,
            "precision": self.precision,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


# ---------------------------------------------------------------------------
# concavity-scope verification


def _check_turan_scope(s: SeriesSpec, chi, horizon: int):
    """Decide how the chi-concavity hypothesis is covered.

    Returns a scope dict, or raises InconclusiveError when the series
    provably violates the hypothesis inside the horizon.
    """
    chi0 = s.turan_global()
    if chi0 is not None and chi0 <= chi:
        return {"kind": "rule-global", "chi0": format_rational(chi0)}
    diagnostics = []
    chi2 = chi * chi
    for n in range(0, horizon + 2):
        if s.is_zero(n):
            diagnostics.append(
                f"zero coefficient at n={n} breaks the domination chain"
            )
            raise InconclusiveError(
                f"cannot certify {s.label()}: zero coefficient at n={n}",
                diagnostics,
            )
    for n in range(1, horizon + 1):
        lhs = s.abs2(n + 1) * s.abs2(n - 1)
        rhs = chi2 * _sq(s.abs2(n))
        if _ex_gt(lhs, rhs):
            diagnostics.append(
                f"|a_{n+1} a_{n-1}| > chi |a_n|^2 at n={n}"
            )
            raise InconclusiveError(
                f"concavity constant chi={format_rational(Fraction(chi))} "
                f"fails at n={n} for {s.label()}",
                diagnostics,
            )
    return {"kind": "finite-verified+asserted", "verified_upto": horizon}


def _sq(v):
    return v * v


def _ex_gt(a, b) -> bool:
    if isinstance(a, QuadVal) or isinstance(b, QuadVal):
        aa = a if isinstance(a, QuadVal) else QuadVal(a)
        return (aa - b).sign() > 0
    return a > b


# ---------------------------------------------------------------------------
# witness construction


def _exact_abs_ratio(s: SeriesSpec, i: int, j: int):
    """|a_i / a_j| exactly, or None when it leaves one-radical arithmetic."""
    try:
        ai, aj = s.coeff(i), s.coeff(j)
        if isinstance(ai, QC) or isinstance(aj, QC):
            # fall back through squared magnitudes
            r2 = Fraction(s.abs2(i)) / Fraction(s.abs2(j))
            r = exact_sqrt(r2)
            return r if r is not None else QuadVal(0, 1, r2)
        num = abs(ai if not isinstance(ai, QuadVal) else ai)
        den = abs(aj if not isinstance(aj, QuadVal) else aj)
        if isinstance(num, QuadVal) or isinstance(den, QuadVal):
            num = num if isinstance(num, QuadVal) else QuadVal(num)
            return num / den
        return Fraction(num) / Fraction(den)
    except (ExactArithmeticError, ZeroDivisionError, TypeError):
        return None


def _exact_sqrt_value(y):
    """sqrt(y) exactly when possible: Fraction, or one-radical QuadVal."""
    if isinstance(y, QuadVal):
        if y.is_rational:
            y = y.rational_value()
        else:
            return None
    y = Fraction(y)
    r = exact_sqrt(y)
    if r is not None:
        return r
    return QuadVal(0, 1, y)


def _window_sum_exact(s: SeriesSpec, lo: int, hi: int, x):
    try:
        total = Fraction(0)
        xp = _pow_exact(x, lo)
        for n in range(lo, hi + 1):
            a = s.coeff(n)
            if not ex_is_zero(a):
                total = ex_add(total, ex_mul(a, xp))
            if n < hi:
                xp = ex_mul(xp, x)
        return total
    except (ExactArithmeticError, TypeError):
        return None


def _pow_exact(x, e: int):
    out = Fraction(1)
    base = x
    k = e
    while k:
        if k & 1:
            out = ex_mul(out, base)
        k >>= 1
        if k:
            base = ex_mul(base, base)
    return out


def witness(s: SeriesSpec, m: int, chi, branch: str, prec: int = DEFAULT_PREC,
            tp: Optional[ThetaPsi] = None) -> Witness:
    """Build one witness at index m for the given branch.

    Fails loudly (WindowPreconditionError) when the branch's structural
    precondition does not hold at m, naming the offending indices.
    """
    if branch not in BRANCHES:
        raise ValueError(f"unknown branch {branch!r}")
    if m < 1:
        raise WindowPreconditionError("witness index must be >= 1")
    chi = _as_exact_chi(chi)
    if tp is None:
        tp = theta_psi_retry(chi, prec)
    psi = tp.psi

    for j in (m - 1, m + 1):
        if s.is_zero(j):
            raise WindowPreconditionError(
                f"x_m undefined at m={m}: a_{j} = 0"
            )

    if branch == "long-run":
        if not s.is_real:
            raise WindowPreconditionError("long-run branch needs real coefficients")
        lo, hi = max(0, m - psi), m + psi
        sgn = s.sign(m)
        if sgn == 0:
            raise WindowPreconditionError(f"a_{m} = 0 at the window center")
        bad = [n for n in range(lo, hi + 1) if s.sign(n) != sgn]
        if bad:
            raise WindowPreconditionError(
                f"window [{lo}, {hi}] is not single-signed at indices {bad}"
            )
        K = psi
        two_sided = lo > 0
    elif branch == "complex-psi0":
        if psi != 0:
            raise WindowPreconditionError(
                f"complex-psi0 branch needs psi(chi) = 0, got psi = {psi}"
            )
        if s.is_zero(m):
            raise WindowPreconditionError(f"a_{m} = 0 at the window center")
        lo = hi = m
        K = 0
        two_sided = True
    else:  # short-runs
        if not s.is_real:
            raise WindowPreconditionError("short-runs branch needs real coefficients")
        K = max(psi, 2)
        lo, hi = 0, m + K
        sgn = s.sign(m)
        if sgn == 0 or s.sign(m + 1) != sgn:
            raise WindowPreconditionError(
                f"a_{m}, a_{m+1} do not share a nonzero sign"
            )
        theta = tp.theta
        runs = sign_runs(s, 0, hi)
        too_long = [r for r in runs.runs if r.sign != 0 and r.length > theta]
        if too_long:
            r0 = too_long[0]
            raise WindowPreconditionError(
                f"same-sign run of length {r0.length} > theta={theta} at {r0.start}"
            )

    y = _exact_abs_ratio(s, m - 1, m + 1)
    work = prec + 32
    if y is not None:
        x_exact = _exact_sqrt_value(y)
    else:
        x_exact = None

    with iv_workprec(work):
        if y is not None:
            y_iv = to_iv(y)
        else:
            y_iv = to_iv(s.abs2(m - 1)) / to_iv(s.abs2(m + 1))
            y_iv = iv.sqrt(y_iv)
        x_iv = iv.sqrt(y_iv)

        wsum = None
        if x_exact is not None:
            wsum = _window_sum_exact(s, lo, hi, x_exact)
        if wsum is not None:
            wa = abs(wsum) if not isinstance(wsum, QC) else None
            if wa is not None:
                w_iv = to_iv(wa)
            else:
                w_iv = iv.sqrt(to_iv(ex_abs2(wsum)))
        else:
            # interval fallback: real windows, or the psi0 single-term window
            acc = iv.mpf(0)
            xp = x_iv ** lo
            for n in range(lo, hi + 1):
                a = s.coeff(n)
                if isinstance(a, QC) and not a.is_real:
                    if lo != hi:
                        raise WindowPreconditionError(
                            "complex coefficients need the psi0 single-term window"
                        )
                    acc = acc + iv.sqrt(to_iv(ex_abs2(a))) * xp
                else:
                    acc = acc + to_iv(a) * xp
                if n < hi:
                    xp = xp * x_iv
            w_iv = abs(acc)

        # peak |a_m x_m^m|
        peak_iv = iv.sqrt(to_iv(s.abs2(m))) * x_iv ** m

        tail_factor = _run_weight_tail_cached(chi, K, work)
        coeff_hi = iv_hi(tail_factor) * (2 if two_sided else 1)
        tail_iv = iv.mpf([0, coeff_hi]) * peak_iv
        # certified lower bound, rounded downward by the interval subtraction
        low = iv_lo(w_iv - tail_iv)
        x_m_lo = iv_lo(x_iv)

    # mpf values are exact dyadics: keep `low` unrounded so it stays a
    # true lower bound at any display precision
    cl = low if low > 0 else mp.mpf(0)
    x_m = x_m_lo if x_exact is None else to_mpf(x_exact, prec)

    return Witness(
        m=m, branch=branch, window=(lo, hi), x_sq=y if y is not None else None,
        x_exact=x_exact, x_mpf=x_m,
        window_sum_exact=wsum,
        window_abs_lo=iv_lo(w_iv), window_abs_hi=iv_hi(w_iv),
        peak_hi=iv_hi(peak_iv), tail_offset=K,
        tail_coeff_hi=coeff_hi, tail_bound=iv_hi(tail_iv),
        certified_lower=cl, two_sided_tail=two_sided,
    )


# ---------------------------------------------------------------------------
# certificate search


def _structurally_valid(s: SeriesSpec, m: int, branch: str, psi: int,
                        theta, K: int) -> bool:
    if m < 1 or s.is_zero(m - 1) or s.is_zero(m + 1) or s.is_zero(m):
        return False
    if branch == "complex-psi0":
        return True
    try:
        sgn = s.sign(m)
    except BoundedSeriesError:
        return False
    if sgn == 0:
        return False
    if branch == "long-run":
        lo, hi = max(0, m - psi), m + psi
        return all(s.sign(n) == sgn for n in range(lo, hi + 1))
    # short-runs: the run-length condition is rechecked inside witness()
    return s.sign(m + 1) == sgn


def certify_unbounded(s: SeriesSpec, chi, M, prec: int = DEFAULT_PREC,
                      branch: Optional[str] = None, assert_turan: bool = False,
                      horizon: int = 256, max_steps: int = 40) -> Certificate:
    """Search witnesses until certified_lower exceeds M; emit a certificate.

    Raises InconclusiveError with diagnostics when no branch applies or the
    concavity hypothesis cannot be covered soundly.  A bounded input like the
    Gaussian family always lands in InconclusiveError: its zero-coefficient
    pattern violates the hypothesis at once.
    """
    chi = _as_exact_chi(chi)
    M = Fraction(_as_exact_chi(M)) if not isinstance(M, Fraction) else M
    diagnostics: List[str] = []

    tp = theta_psi_retry(chi, prec)
    psi, theta = tp.psi, tp.theta

    scope = _check_turan_scope(s, chi, horizon)
    if scope["kind"] != "rule-global" and not assert_turan:
        raise InconclusiveError(
            f"{s.label()}: concavity verified only up to n={horizon}; "
            "pass assert_turan=True to proceed under that assertion",
            [f"finite verification passed to {horizon}; no rule-global certificate"],
        )

    flipped = False
    work_s = s

    if branch is None:
        if not s.is_real:
            if psi == 0:
                branch = "complex-psi0"
            else:
                raise InconclusiveError(
                    f"complex coefficients need psi(chi)=0; psi={psi}",
                    diagnostics,
                )
        else:
            scan_hi = max(horizon, 8 * (psi + 1) + 64)
            runs = sign_runs(s, 0, scan_hi)
            max_run = runs.max_nonzero_run()
            if psi == 0 or max_run >= 2 * psi + 1:
                branch = "long-run"
            elif max_run == 1 and all(r.sign != 0 for r in runs.runs):
                # strictly alternating: certify f(-x) instead
                work_s = alternate_flip(s)
                flipped = True
                branch = "long-run"
                diagnostics.append("signs alternate strictly: certifying f(-x)")
            elif max_run <= theta and max_run >= 2:
                branch = "short-runs"
            else:
                raise InconclusiveError(
                    "no branch applies: runs neither reach width "
                    f"{2 * psi + 1} nor stay within theta={theta}",
                    diagnostics + [f"max same-sign run on [0,{scan_hi}]: {max_run}"],
                )

    K = psi if branch in ("long-run", "complex-psi0") else max(psi, 2)

    witnesses: List[Witness] = []
    with iv_workprec(prec + 16):
        M_up = iv_hi(to_iv(M))

    target = 1
    steps = 0
    span = 8 * (psi + 2) + 64
    last_x_sq = None
    while steps < max_steps:
        steps += 1
        m = None
        for cand in range(max(target, 1), max(target, 1) + span):
            if _structurally_valid(work_s, cand, branch, psi, theta, K):
                m = cand
                break
        if m is None:
            target *= 2
            continue
        try:
            w = witness(work_s, m, chi, branch, prec, tp)
        except WindowPreconditionError as e:
            diagnostics.append(f"m={m}: {e}")
            target = m + 1
            continue
        if last_x_sq is not None and w.x_sq is not None and not _ex_gt(w.x_sq, last_x_sq):
            target = m + 1
            continue  # keep x_m strictly increasing along the certificate
        witnesses.append(w)
        if w.x_sq is not None:
            last_x_sq = w.x_sq
        if w.certified_lower > M_up:
            return Certificate(
                series=work_s, chi=chi, branch=branch, theta=theta, psi=psi,
                conclusion_threshold=M, witnesses=witnesses,
                turan_scope=scope, flipped=flipped, precision=prec,
            )
        target = max(2 * m, m + 1)

    raise InconclusiveError(
        f"witness search exhausted ({max_steps} steps) below the target "
        f"threshold {M}",
        diagnostics + [
            f"best certified_lower: "
            f"{mp.nstr(max((w.certified_lower for w in witnesses), default=mp.mpf(0)), 8)}"
        ],
    )


# ---------------------------------------------------------------------------
# independent recheck


def certificate_from_json(obj) -> dict:
    if isinstance(obj, str):
        obj = json.loads(obj)
    if isinstance(obj, Certificate):
        obj = obj.to_json()
    if obj.get("format") != "boundedseries-certificate":
        raise ValueError("not a certificate document")
    if int(obj.get("version", -1)) != CERTIFICATE_VERSION:
        raise ValueError(f"unsupported certificate version {obj.get('version')}")
    return obj


def recheck(cert, prec: Optional[int] = None, explain: bool = False):
    """Re-verify every arithmetic claim of a certificate from scratch.

    Recomputes coefficients, witness points, window sums and tail bounds from
    the serialized series rule at an independent (higher) precision and
    returns False on any discrepancy.  ``explain=True`` also returns the list
    of failures.
    """
    reasons: List[str] = []

    def fail(msg):
        reasons.append(msg)
        return (False, reasons) if explain else False

    try:
        doc = certificate_from_json(cert)
    except (ValueError, json.JSONDecodeError) as e:
        reasons.append(str(e))
        return (False, reasons) if explain else False

    prec = prec or 2 * int(doc.get("precision", DEFAULT_PREC))
    try:
        s = series_from_json(doc["series"])
        chi = _as_exact_chi(parse_rational(doc["chi"])) if isinstance(doc["chi"], str) \
            else _exact_from_json(doc["chi"])
        M = parse_rational(doc["conclusion_threshold"])
        branch = doc["branch"]
        if branch not in BRANCHES:
            return fail(f"unknown branch {branch!r}")
        tp = theta_psi_retry(chi, prec)
        if doc["psi"] != tp.psi:
            return fail(f"stored psi={doc['psi']} but recomputed {tp.psi}")
        stored_theta = math.inf if doc["theta"] == "inf" else int(doc["theta"])
        if stored_theta != tp.theta:
            return fail(f"stored theta={doc['theta']} but recomputed {tp.theta}")

        scope = doc.get("turan_scope", {})
        try:
            re_scope = _check_turan_scope(
                s, chi,
                int(scope.get("verified_upto", 64)) if scope.get("kind") != "rule-global" else 8,
            )
        except InconclusiveError as e:
            return fail(f"concavity scope no longer verifies: {e}")
        if scope.get("kind") == "rule-global" and re_scope["kind"] != "rule-global":
            return fail("stored scope claims rule-global but the rule does not")

        ws = doc.get("witnesses", [])
        if not ws:
            if M > 0:
                return fail("empty witness list cannot certify a positive threshold")
            return (True, reasons) if explain else True

        prev_x_sq = None
        last_cl = None
        for i, wd in enumerate(ws):
            m = int(wd["m"])
            try:
                w2 = witness(s, m, chi, branch, prec, tp)
            except (WindowPreconditionError, BoundedSeriesError) as e:
                return fail(f"witness {i} (m={m}) fails preconditions on recheck: {e}")
            if tuple(wd["window"]) != w2.window:
                return fail(f"witness {i}: window mismatch")
            if wd.get("x_is_exact"):
                stored_x = _exact_from_json(wd["x"])
                if w2.x_exact is None or not _ex_eq(stored_x, w2.x_exact):
                    return fail(f"witness {i}: stored exact x_m does not match")
            stored_xsq = _exact_from_json(wd["x_sq"])
            if w2.x_sq is None or not _ex_eq(stored_xsq, w2.x_sq):
                return fail(f"witness {i}: stored x_m^2 does not match")
            if wd.get("window_sum") is not None:
                stored_wsum = _exact_from_json(wd["window_sum"])
                if w2.window_sum_exact is None or not _ex_eq(stored_wsum, w2.window_sum_exact):
                    return fail(f"witness {i}: exact window sum mismatch")
            stored_cl = triple_to_mpf(wd["certified_lower"], prec)
            # exact dyadic comparison: a re-run at higher precision can only
            # tighten the bound, modulo a one-ulp-at-original-precision slack
            stored_f = mpf_to_fraction(stored_cl)
            recomp_f = mpf_to_fraction(w2.certified_lower)
            slack = recomp_f * Fraction(1, 2 ** (int(doc.get("precision", DEFAULT_PREC)) - 4))
            if stored_f > recomp_f + slack:
                return fail(
                    f"witness {i}: stored certified_lower exceeds the "
                    f"recomputed bound ({mp.nstr(stored_cl, 8)} > "
                    f"{mp.nstr(w2.certified_lower, 8)})"
                )
            if prev_x_sq is not None and not _ex_gt(w2.x_sq, prev_x_sq):
                return fail(f"witness {i}: x_m does not increase")
            prev_x_sq = w2.x_sq
            last_cl = stored_cl
        with iv_workprec(prec + 16):
            M_up = iv_hi(to_iv(M))
        if not (last_cl > M_up):
            return fail("final certified_lower does not exceed the threshold")
    except BoundedSeriesError as e:
        return fail(f"recheck error: {e}")
    return (True, reasons) if explain else True


def _ex_eq(a, b) -> bool:
    try:
        if isinstance(a, QuadVal) or isinstance(b, QuadVal):
            aa = a if isinstance(a, QuadVal) else QuadVal(a)
            bb = b if isinstance(b, QuadVal) else QuadVal(b)
            return aa == bb
        if isinstance(a, QC) or isinstance(b, QC):
            return QC(a) == b if not isinstance(a, QC) else a == (b if isinstance(b, QC) else QC(b))
        return Fraction(a) == Fraction(b)
    except (TypeError, ExactArithmeticError):
        return False
