"""Backward shift algebra on series bounded on the real line.

The shift sigma drops the leading coefficient; left extension c + z*f(z) is
its one-parameter right inverse.  Membership of f in the k-th shift range is
decided numerically through the behavior of f(1/x) at x -> 0 (an asymptotic
expansion with k-1 coefficients and an O(x^k) remainder), and the resolvent
equation sigma f - lambda f = g is solved by the coefficient recurrence
f_{n+1} = lambda f_n + g_n seeded with f_0 = -g(1/lambda)/lambda.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

import mpmath
from mpmath import mp

from .bigreal import (
    DEFAULT_PREC,
    BoundedSeriesError,
    ensure_finite,
    to_mpc,
    to_mpf,
)
from .exactnum import QC, Fraction as _Fr, ex_is_zero, parse_rational
from .series import (
    LeftExtendRule,
    SeriesSpec,
    ShiftedRule,
    choose_truncation,
    evaluate,
)


def shift(s: SeriesSpec, k: int) -> SeriesSpec:
    """sigma^k: coefficient n of the result is coefficient n+k of s."""
    if k < 0:
        raise ValueError("shift exponent must be >= 0")
    if k == 0:
        return s
    return SeriesSpec(ShiftedRule(s, k))


@dataclass
class LeftExtension:
    series: SeriesSpec
    samples: List[Tuple[object, object]]   # (x, |g(x)|) along the schedule
    apparently_bounded: bool
    growth_exponent: object                # fitted slope of log|g| vs log x
    note: str = "diagnostic only, not a proof"


_EXTEND_MENU = (2000, 1000, 500, 250, 120, 60, 30, 16, 8, 4)
_EXTEND_BUDGET_BITS = 16384


def left_extend(s: SeriesSpec, c, schedule: Sequence = None,
                prec: int = DEFAULT_PREC) -> LeftExtension:
    """c + z*f(z), with a sampled boundedness diagnostic.

    The extension is bounded iff f(y) = O(1/y); the diagnostic fits the
    growth of |c + y f(y)| on the schedule and reports the apparent verdict.
    The default schedule adapts to the rule's term envelope so that fast
    growers (Gaussian-type) are sampled where evaluation stays affordable.
    """
    ext = SeriesSpec(LeftExtendRule(s, c))
    if schedule is None:
        from .series import estimate_peak_log2

        chosen = []
        for x in _EXTEND_MENU:
            if estimate_peak_log2(ext, x, _EXTEND_BUDGET_BITS) is not None:
                chosen.append(x)
            if len(chosen) == 4:
                break
        if not chosen:
            chosen = [2]
        schedule = tuple(sorted(chosen))
    samples = []
    logs = []
    with mp.workprec(prec + 16):
        floor = mp.mpf(2) ** (-prec // 2)
        for x in schedule:
            xq = Fraction(parse_rational(x)) if not isinstance(x, (int, Fraction)) else Fraction(x)
            if ext.has_tail_bound():
                N = choose_truncation(ext, abs(xq), Fraction(1, 2 ** 64), prec=64)
            else:
                N = 512
            r = evaluate(ext, xq, N, prec, method="horner")
            mag = mp.fabs(r.value)
            samples.append((to_mpf(xq, prec), mag))
            logs.append((mp.log(abs(to_mpf(xq, prec + 16))), mp.log(max(mag, floor))))
        slope = _fit_slope(logs)
        bounded = slope < mp.mpf("0.5")
    return LeftExtension(
        series=ext, samples=samples, apparently_bounded=bool(bounded),
        growth_exponent=slope,
    )


def _fit_slope(points):
    """Least-squares slope for (x, y) pairs (few points, plain formulas)."""
    n = len(points)
    sx = sum(p[0] for p in points)
    sy = sum(p[1] for p in points)
    sxx = sum(p[0] * p[0] for p in points)
    sxy = sum(p[0] * p[1] for p in points)
    denom = n * sxx - sx * sx
    if denom == 0:
        return mp.mpf(0)
    return (n * sxy - sx * sy) / denom


# ---------------------------------------------------------------------------
# membership in the k-th shift range via the expansion at infinity


@dataclass
class PeanoResult:
    accepted: bool
    k: int
    coefficients: List[object]             # c_1 .. c_{k-1} (empty when k = 1)
    remainder_samples: List[Tuple[object, object]]   # (y, |r_k(y)|)
    growth_exponent: object
    stage_rejected: Optional[int] = None
    stage_disagreement: Optional[object] = None
    tol: float = 0.1
    note: str = ""


def peano_membership(s: SeriesSpec, k: int, schedule: Sequence = None,
                     tol: float = 0.1, growth_tol: float = 3.0,
                     prec: int = DEFAULT_PREC) -> PeanoResult:
    """Numerical decision procedure for membership in the k-th shift range.

    Fits the expansion coefficients c_1..c_{k-1} by least squares on
    g(y) = y^k f(y) over the large-|y| half of a two-signed schedule (so the
    fitting error decays at the smaller checked points), cross-validates each
    coefficient on two interleaved sub-schedules, and accepts iff the stage-k
    remainder g - sum c_i y^{k-i} does not grow across the schedule halves
    (max over the upper half at most ``growth_tol`` times the lower half).
    A heuristic with explicit schedule and tolerances, not a proof: the
    underlying condition is asymptotic.
    """
    if k < 1:
        raise ValueError("membership level k must be >= 1")
    if schedule is None:
        schedule = (8, 12, 16, 24, 48, 64, 96, 128)
    ys = [Fraction(parse_rational(y)) if not isinstance(y, (int, Fraction)) else Fraction(y)
          for y in schedule]
    if len(ys) < 4:
        raise ValueError("schedule needs at least four points")
    if any(b <= a for a, b in zip(ys, ys[1:])) or ys[0] <= 0:
        raise ValueError("schedule must be positive and increasing")

    # signed evaluation points
    pts: List[Fraction] = []
    for y in ys:
        pts.append(y)
        pts.append(-y)

    work = prec + 32
    F = {}
    for y in pts:
        if s.has_tail_bound():
            N = choose_truncation(s, abs(y), Fraction(1, 2 ** (prec + 16)), prec=64)
        else:
            N = 512
        r = evaluate(s, y, N, work, method="horner")
        F[y] = r.value

    half = len(ys) // 2
    cut = ys[half]
    upper = [y for y in pts if abs(y) >= cut]
    lower = [y for y in pts if abs(y) < cut]

    with mp.workprec(work):
        floor = mp.mpf(2) ** (-prec // 2)
        gvals = {y: to_mpf(y, work) ** k * F[y] for y in pts}

        fit_pts = upper if len(upper) >= max(k, 4) else pts
        coeffs = _fit_expansion(fit_pts, gvals, k, work)

        # stage stability on interleaved sub-schedules, both spanning the
        # full magnitude range; skipped (with a note) when too few points
        note = ""
        sub_a = [p for p in pts if ys.index(abs(p)) % 2 == 0]
        sub_b = [p for p in pts if ys.index(abs(p)) % 2 == 1]
        if k > 1 and len(sub_a) >= k and len(sub_b) >= k:
            ca = _fit_expansion(sub_a, gvals, k, work)
            cb = _fit_expansion(sub_b, gvals, k, work)
            for j in range(1, k):
                scale = max(mp.mpf(1), mp.fabs(coeffs[j - 1]))
                disagree = mp.fabs(ca[j - 1] - cb[j - 1])
                if disagree > tol * scale:
                    return PeanoResult(
                        accepted=False, k=k, coefficients=coeffs,
                        remainder_samples=[], growth_exponent=mp.mpf(0),
                        stage_rejected=j, stage_disagreement=disagree, tol=tol,
                        note=f"stage-{j} coefficient estimates disagree "
                             f"across sub-schedules (oscillatory limit)",
                    )
        elif k > 1:
            note = "schedule too short for the stage-stability cross-check; "

        def residual(y):
            yv = to_mpf(y, work)
            r = gvals[y]
            for i, ci in enumerate(coeffs, start=1):
                r = r - ci * yv ** (k - i)
            return mp.fabs(r)

        rem = [(to_mpf(y, prec), residual(y)) for y in pts]
        max_up = max(residual(y) for y in upper)
        max_low = max(residual(y) for y in lower) if lower else max_up
        accepted = max_up <= growth_tol * max(max_low, floor)

        logs = [(mp.log(mp.fabs(to_mpf(y, work))), mp.log(max(r, floor)))
                for (y, r) in [(y, residual(y)) for y in pts]]
        slope = _fit_slope(logs)

    return PeanoResult(
        accepted=bool(accepted), k=k, coefficients=coeffs,
        remainder_samples=rem, growth_exponent=slope, tol=tol,
        note=note if accepted else
        note + f"stage-{k} remainder grows across the schedule "
               f"(upper/lower max ratio {mp.nstr(max_up / max(max_low, floor), 4)})",
    )


def _fit_expansion(points, gvals, k: int, work: int):
    """Least-squares coefficients c_1..c_{k-1} of g(y) ~ sum c_i y^{k-i}.

    Basis degrees are k-1 down to 1 (no constant, no y^k term); the normal
    equations are tiny (k-1 unknowns) and solved at working precision.
    """
    if k <= 1:
        return []
    n = k - 1
    complex_any = any(isinstance(gvals[y], mpmath.mpc) for y in points)
    A = mp.matrix(n, n)
    b = mp.matrix(n, 1)
    if complex_any:
        A = A + 0j
        b = b + 0j
    for y in points:
        yv = to_mpf(y, work)
        phi = [yv ** (k - i) for i in range(1, k)]
        g = gvals[y]
        for r in range(n):
            b[r] += phi[r] * g
            for c in range(n):
                A[r, c] += phi[r] * phi[c]
    sol = mp.lu_solve(A, b)
    return [sol[i] for i in range(n)]


# ---------------------------------------------------------------------------
# resolvent of the shifted equation


@dataclass
class ResolventSolution:
    lam: object                      # exact lambda
    f0: object                       # mpf/mpc at working precision
    f0_error: object                 # certified error bound on f0
    coefficients: List[object]       # f_0 .. f_N at working precision
    residual_max: object             # max |f_{n+1} - lam f_n - g_n|, n < N
    N: int
    requested_prec: int
    working_prec: int
    evaluated_off_real_axis: bool
    note: str = ""


def resolvent_solve(g: SeriesSpec, lam, N: int, prec: int = DEFAULT_PREC) -> ResolventSolution:
    """Unique bounded solution f of sigma f - lambda f = g, coefficientwise.

    f_0 = -g(1/lambda)/lambda (certified evaluation), then
    f_{n+1} = lambda f_n + g_n.  The recurrence amplifies the f_0 error by
    |lambda|^n before the analytic cancellation, so everything runs at 4x the
    requested precision; residuals are measured at the working precision.
    """
    lam = _parse_lambda(lam)
    if ex_is_zero(lam):
        raise ValueError(
            "lambda = 0: sigma f = g has no unique bounded preimage; "
            "use left_extend"
        )
    work = 4 * prec
    lam_is_real = not (isinstance(lam, QC) and not lam.is_real)

    inv = _exact_inverse(lam)
    if g.has_tail_bound():
        from .exactnum import ex_abs2
        from .bigreal import iv_hi, iv_workprec, to_iv
        from mpmath import iv

        with iv_workprec(64):
            inv_abs = iv_hi(iv.sqrt(to_iv(ex_abs2(inv))))
        N_eval = choose_truncation(g, inv_abs, Fraction(1, 2 ** (work + 16)), prec=64)
    else:
        N_eval = max(N, 256)
    r = evaluate(g, inv, N_eval, work)

    with mp.workprec(work):
        if lam_is_real and not isinstance(r.value, mpmath.mpc):
            lam_v = to_mpf(lam, work)
            inv_v = to_mpf(inv, work)
        else:
            lam_v = to_mpc(lam, work)
            inv_v = to_mpc(inv, work)
        f0 = -(inv_v * r.value)
        f0_err = mp.fabs(inv_v) * r.error
        coeffs = [f0]
        for n in range(N):
            gn = g.coeff(n)
            if isinstance(gn, QC) and not gn.is_real:
                gv = to_mpc(gn, work)
            else:
                gv = to_mpf(gn, work)
            coeffs.append(lam_v * coeffs[-1] + gv)
        resid = mp.mpf(0)
        for n in range(N):
            gn = g.coeff(n)
            if isinstance(gn, QC) and not gn.is_real:
                gv = to_mpc(gn, work)
            else:
                gv = to_mpf(gn, work)
            resid = max(resid, mp.fabs(coeffs[n + 1] - lam_v * coeffs[n] - gv))
        ensure_finite(resid)

    return ResolventSolution(
        lam=lam, f0=f0, f0_error=f0_err, coefficients=coeffs,
        residual_max=resid, N=N, requested_prec=prec, working_prec=work,
        evaluated_off_real_axis=not lam_is_real,
        note="series evaluation of g at 1/lambda is valid everywhere "
             "(g is entire)" if not lam_is_real else "",
    )


def _parse_lambda(lam):
    if isinstance(lam, QC):
        return lam
    if isinstance(lam, (int, Fraction)):
        return Fraction(lam)
    if isinstance(lam, str):
        return parse_rational(lam)
    if isinstance(lam, complex):
        return QC(Fraction(lam.real), Fraction(lam.imag))
    if isinstance(lam, mpmath.mpc):
        from .bigreal import mpf_to_fraction

        return QC(mpf_to_fraction(lam.real), mpf_to_fraction(lam.imag))
    if isinstance(lam, (float, mpmath.mpf)):
        from .bigreal import mpf_to_fraction

        return mpf_to_fraction(mp.mpf(lam))
    raise ValueError(f"cannot interpret lambda {lam!r}")


def _exact_inverse(lam):
    if isinstance(lam, QC):
        a2 = lam.abs2()
        return QC(lam.re / a2, -lam.im / a2)
    return Fraction(1) / Fraction(lam)


# ---------------------------------------------------------------------------
# kernel


def kernel_test(s: SeriesSpec, k: int = 1, horizon: int = 1000) -> bool:
    """True iff the series is constant (kernel of every shift power).

    Uses the rule's exact degree when it knows one; otherwise checks
    coefficients 1..horizon exactly.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    d = s.degree()
    if d is not None:
        return d <= 0
    return all(s.is_zero(n) for n in range(1, horizon + 1))
