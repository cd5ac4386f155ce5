"""Three convergence notions on bounded series, told apart by witnesses.

For families indexed by m this module produces the coefficient-sum distance
to the limit (certified), a certified lower bound on the uniform distance
over the real line, sampled maxima on circles |z| = r, and pointwise probes;
together the rows realize all three separation patterns.

The exp(-z^{2m}) family also powers an erratum check: its coefficient-sum
distance to 1 is exactly e - 1 for every m (coefficients +-1/k! at degrees
2mk), so it does not converge to 1 in that metric; the corrected family
exp(-(z/2)^{2m}) has distance e^{4^{-m}} - 1, which does decrease to 0.
Both families ship, clearly labeled; nothing is silently "fixed".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath
from mpmath import iv, mp

from .bigreal import (
    DEFAULT_PREC,
    iv_hi,
    iv_lo,
    iv_workprec,
    to_iv,
    to_mpf,
)
from .exactnum import format_rational, parse_rational
from .series import (
    SeriesSpec,
    add,
    choose_truncation,
    evaluate,
    exp_neg_2m,
    exp_neg_half_2m,
    exp_neg_sq_over_m,
    explicit,
    gaussian,
    l1_norm,
    scale,
    sin_scaled,
)


def l1_distance(s: SeriesSpec, t: SeriesSpec, N: int, prec: int = DEFAULT_PREC):
    """Coefficient-sum distance sum_{n<=N} |a_n - b_n| with certified tail."""
    return l1_norm(add(s, scale(t, -1)), N, prec)


def _monomial(m: int) -> SeriesSpec:
    return explicit([0] * m + [1])


def circle_max(s: SeriesSpec, r, K: int = 1024, prec: int = DEFAULT_PREC,
               N: Optional[int] = None) -> Tuple[object, object]:
    """Sampled maximum of |f| over K points of the circle |z| = r.

    Returns (max_lower, max_upper): the sampled max is a lower bound for the
    true boundary maximum; the upper value adds the evaluation errors.
    """
    rq = parse_rational(r) if not isinstance(r, (int, Fraction)) else Fraction(r)
    if N is None:
        if s.has_tail_bound():
            N = choose_truncation(s, rq, Fraction(1, 2 ** (prec // 2 + 16)), prec=64)
        else:
            N = 256
    best_lo = mp.mpf(0)
    best_hi = mp.mpf(0)
    with mp.workprec(prec + 16):
        rv = to_mpf(rq, prec + 16)
        for j in range(K):
            theta = 2 * mp.pi * j / K
            z = mp.mpc(rv * mp.cos(theta), rv * mp.sin(theta))
            res = evaluate(s, z, N, prec, method="horner")
            mag = mp.fabs(res.value)
            if mag - res.error > best_lo:
                best_lo = mag - res.error
            if mag + res.error > best_hi:
                best_hi = mag + res.error
    return best_lo, best_hi


@dataclass
class TopologyReport:
    family: str
    m: int
    limit: str
    l1_distance_to_limit: object            # mpf (partial + tail certified)
    l1_exact_note: str
    supR_distance_lower: object             # certified mpf lower bound
    compact_sup: Dict[str, object]          # r (as str) -> sampled max of |f - limit|
    pointwise_probe: List[Tuple[str, str]]  # (z, value) rendered
    notes: str = ""


def _fmt(x, digits=12):
    return mp.nstr(x, digits)


def _report_expnegsq_over_m(m: int, prec: int, radii, K: int) -> TopologyReport:
    s = exp_neg_sq_over_m(m)
    diff = add(s, explicit([-1]))           # f - 1
    N = choose_truncation(diff, max(radii) if radii else 4, Fraction(1, 2 ** 80), prec=64)
    l1 = l1_norm(diff, N, prec)
    # |f(x) - 1| = 1 - exp(-x^2/m) -> 1; certified at x* = 4*ceil(sqrt(m))
    xstar = 4 * math.isqrt(m) + 4
    r = evaluate(diff, xstar, choose_truncation(diff, xstar, Fraction(1, 2 ** 80), prec=64), prec)
    with mp.workprec(prec):
        sup_lower = mp.fabs(r.value) - r.error
    comp = {}
    for rr in radii:
        lo, hi = circle_max(diff, rr, K, prec)
        comp[str(rr)] = lo
    return TopologyReport(
        family="exp(-z^2/m)", m=m, limit="1",
        l1_distance_to_limit=l1.partial, l1_exact_note="e^{1/m} - 1",
        supR_distance_lower=sup_lower,
        compact_sup=comp,
        pointwise_probe=[(str(xstar), _fmt(r.value))],
        notes="compact sup of |f-1| shrinks with m; uniform distance on R stays near 1",
    )


def _report_sin_scaled(m: int, prec: int, radii, K: int) -> TopologyReport:
    s = sin_scaled(m)
    N = choose_truncation(s, max(max(radii) if radii else 2, 2) * m + 2, Fraction(1, 2 ** 80), prec=64)
    l1 = l1_norm(s, N, prec)
    # max of |sin(mx)/m| on R is 1/m; certify a lower bound near x = pi/(2m)
    with mp.workprec(prec + 16):
        x0 = mp.pi / (2 * m)
    r = evaluate(s, x0, N, prec, method="horner")
    with mp.workprec(prec):
        sup_lower = mp.fabs(r.value) - r.error
    comp = {}
    for rr in radii:
        lo, hi = circle_max(s, rr, K, prec)
        comp[str(rr)] = lo
    return TopologyReport(
        family="sin(mz)/m", m=m, limit="0",
        l1_distance_to_limit=l1.partial, l1_exact_note="sinh(m)/m",
        supR_distance_lower=sup_lower,
        compact_sup=comp,
        pointwise_probe=[(_fmt(x0, 8), _fmt(r.value))],
        notes="uniform distance on R is 1/m -> 0 while the coefficient-sum "
              "distance sinh(m)/m diverges",
    )


def _report_expneg2m(m: int, prec: int, K: int) -> TopologyReport:
    s = exp_neg_2m(m)
    diff = add(s, explicit([-1]))
    N = 2 * m * 64
    l1 = l1_norm(diff, N, prec)
    probe_N = choose_truncation(s, 1, Fraction(1, 2 ** (prec + 16)), prec=64)
    ri = evaluate(s, mpmath.mpc(0, 1), probe_N, prec, method="horner")
    comp = {}
    for rr in (1,):
        lo, hi = circle_max(diff, rr, K, prec)
        comp[str(rr)] = lo
    with mp.workprec(prec):
        xstar = Fraction(1) + Fraction(1, m)
        rs = evaluate(diff, xstar, choose_truncation(diff, xstar, Fraction(1, 2 ** 80), prec=64), prec)
        sup_lower = mp.fabs(rs.value) - rs.error
    return TopologyReport(
        family="exp(-z^{2m})", m=m, limit="1",
        l1_distance_to_limit=l1.partial, l1_exact_note="e - 1 for every m",
        supR_distance_lower=sup_lower,
        compact_sup=comp,
        pointwise_probe=[("i", _fmt(ri.value))],
        notes="coefficient-sum distance to 1 is constant (erratum evidence); "
              "value at z=i alternates between e^{-1} and e with the parity of m",
    )


def _report_exp_half(m: int, prec: int, K: int) -> TopologyReport:
    s = exp_neg_half_2m(m)
    diff = add(s, explicit([-1]))
    N = 2 * m * 64
    l1 = l1_norm(diff, N, prec)
    z = mpmath.mpc(0, 3)
    probe_N = choose_truncation(s, 3, Fraction(1, 2 ** (prec + 16)), prec=64)
    r3 = evaluate(s, z, probe_N, prec, method="horner")
    comp = {}
    for rr in (1,):
        lo, hi = circle_max(diff, rr, K, prec)
        comp[str(rr)] = lo
    with mp.workprec(prec):
        xstar = 2 * (Fraction(1) + Fraction(1, m))
        rs = evaluate(diff, xstar, choose_truncation(diff, xstar, Fraction(1, 2 ** 80), prec=64), prec)
        sup_lower = mp.fabs(rs.value) - rs.error
    return TopologyReport(
        family="exp(-(z/2)^{2m})", m=m, limit="1",
        l1_distance_to_limit=l1.partial, l1_exact_note="e^{4^{-m}} - 1, decreasing to 0",
        supR_distance_lower=sup_lower,
        compact_sup=comp,
        pointwise_probe=[("3i", _fmt(mp.fabs(r3.value)))],
        notes="corrected family: coefficient-sum distance to 1 decreases to 0, "
              "while |f(3i)| diverges for odd m (no compact convergence)",
    )


def counterexample_suite(m_range: Sequence[int], prec: int = DEFAULT_PREC,
                         radii: Sequence = (1, 2), K: int = 256,
                         parallel: int = 1) -> List[TopologyReport]:
    """Inequivalence witnesses for each m: all three separation patterns.

    (a) exp(-z^2/m): compact convergence to 1 without uniform convergence
    on R; (b) sin(mz)/m: uniform convergence to 0 on R with coefficient-sum
    distance >= 1; (c) exp(-z^{2m}): no pointwise convergence at z = i and a
    constant coefficient-sum distance to 1 (erratum evidence); (d) the
    corrected family exp(-(z/2)^{2m}).
    """
    tasks = []
    for m in m_range:
        tasks.append(("a", m))
        tasks.append(("b", m))
        tasks.append(("c", m))
        tasks.append(("d", m))
    rows = _pmap(_suite_row, [(kind, m, prec, tuple(radii), K) for kind, m in tasks],
                 parallel)
    return rows


def _suite_row(args):
    kind, m, prec, radii, K = args
    if kind == "a":
        return _report_expnegsq_over_m(m, prec, radii, K)
    if kind == "b":
        return _report_sin_scaled(m, prec, radii, K)
    if kind == "c":
        return _report_expneg2m(m, prec, K)
    return _report_exp_half(m, prec, K)


def _pmap(fn, items, degree: int):
    if degree <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    import concurrent.futures as fut

    with fut.ProcessPoolExecutor(max_workers=degree) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# density demonstration


@dataclass
class DensityRow:
    lam: Fraction
    l1_exact: object          # e^lam - 1 (certified upper of the enclosure)
    l1_series: object         # partial-sum value from coefficients
    compact_bound: object     # r^m (e^{lam r^2} - 1), certified upper
    sampled_sup: object       # sampled max over the circle (lower bound)
    sampled_le_bound: bool


def density_demo(m: int, lambda_schedule: Sequence, r, prec: int = DEFAULT_PREC,
                 K: int = 256, parallel: int = 1) -> List[DensityRow]:
    """Monomial approximation by z^m exp(-lam z^2) as lam -> 0.

    Per lambda: the exact coefficient-sum distance e^lam - 1, the compact
    bound r^m (e^{lam r^2} - 1) on |z| <= r, and a sampled circle maximum
    which must stay below the bound (within evaluation error).
    """
    rq = parse_rational(r) if not isinstance(r, (int, Fraction)) else Fraction(r)
    if rq <= 0:
        raise ValueError("r must be positive")
    lams = [parse_rational(l) if not isinstance(l, (int, Fraction)) else Fraction(l)
            for l in lambda_schedule]
    if any(l <= 0 for l in lams):
        raise ValueError("lambda schedule must be positive")
    return _pmap(_density_row, [(m, l, rq, prec, K) for l in lams], parallel)


def _density_row(args):
    m, lam, rq, prec, K = args
    diff = add(_monomial(m), scale(gaussian(lam, m), -1))
    with iv_workprec(prec + 16):
        lam_iv = to_iv(lam)
        r_iv = to_iv(rq)
        l1_exact = iv_hi(iv.exp(lam_iv) - 1)
        bound = iv_hi(r_iv ** m * (iv.exp(lam_iv * r_iv ** 2) - 1))
    N = choose_truncation(diff, rq, Fraction(1, 2 ** 96), prec=64)
    l1 = l1_norm(diff, max(N, 64), prec)
    lo, hi = circle_max(diff, rq, K, prec, N=N)
    # the analytic bound can be attained (z = +-ir), so the certified check
    # is that the sampled lower bound never exceeds the bound's enclosure
    return DensityRow(
        lam=lam, l1_exact=l1_exact, l1_series=l1.partial,
        compact_bound=bound, sampled_sup=lo,
        sampled_le_bound=bool(lo <= bound),
    )


# ---------------------------------------------------------------------------
# erratum report


def erratum_report(m_range: Sequence[int], prec: int = DEFAULT_PREC) -> dict:
    """Coefficient-sum distances of both exp families, labeled side by side.

    The original family keeps distance e - 1 from 1 for every m; the
    corrected family's distance e^{4^{-m}} - 1 strictly decreases to 0.
    """
    out = {
        "claim_under_test": "exp(-z^{2m}) -> 1 in the coefficient-sum metric",
        "original_family": [],
        "corrected_family": [],
    }
    with iv_workprec(prec + 16):
        e_minus_1 = iv.exp(iv.mpf(1)) - 1
        target_lo, target_hi = iv_lo(e_minus_1), iv_hi(e_minus_1)
    prev_corr = None
    constant_ok = True
    decreasing_ok = True
    for m in m_range:
        d1 = l1_norm(add(exp_neg_2m(m), explicit([-1])), 2 * m * 64, prec)
        with mp.workprec(prec):
            within = (mp.fabs(d1.partial - target_lo)
                      <= (d1.partial_error + (d1.tail_bound or 0)
                          + (target_hi - target_lo) + mp.mpf(2) ** (8 - prec)))
        constant_ok = constant_ok and bool(within)
        out["original_family"].append({
            "m": m, "l1_distance_to_1": _fmt(d1.partial, 20),
            "equals_e_minus_1": bool(within),
        })
        d2 = l1_norm(add(exp_neg_half_2m(m), explicit([-1])), 2 * m * 64, prec)
        with iv_workprec(prec + 16):
            closed = iv.exp(to_iv(Fraction(1, 4 ** m))) - 1
            closed_hi = iv_hi(closed)
        if prev_corr is not None and not (d2.partial < prev_corr):
            decreasing_ok = False
        prev_corr = d2.partial
        out["corrected_family"].append({
            "m": m, "l1_distance_to_1": _fmt(d2.partial, 20),
            "closed_form": _fmt(closed_hi, 20),
        })
    out["original_distance_constant_e_minus_1"] = constant_ok
    out["corrected_distance_strictly_decreasing"] = decreasing_ok
    out["conclusion"] = (
        "the original family does not converge to 1 in the coefficient-sum "
        "metric (distance is constant e - 1); the corrected family does"
    )
    return out
