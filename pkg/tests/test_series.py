import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mp

from boundedseries import series as S
from boundedseries.bigreal import RangeOverflowError
from boundedseries.series import (
    UndefinedCoefficientError,
    add,
    cauchy_product,
    evaluate,
    explicit,
    l1_norm,
    recover_head,
    scale,
    series_from_json,
    series_to_json,
    sup_norm_estimate,
)


# ---------------------------------------------------------------------------
# coefficients


def test_coeff_trivials():
    assert S.gaussian(1, 0).coeff(2) == Fraction(-1)
    assert S.sin_series().coeff(3) == Fraction(-1, 6)
    th = S.theta_series(rho=Fraction(1, 3))
    assert th.coeff(2) == Fraction(1, 81)
    assert S.cos_series().coeff(0) == 1
    assert S.sin_scaled(3).coeff(3) == Fraction(-9, 6)
    assert S.exp_neg_2m(2).coeff(4) == -1
    assert S.exp_neg_half_2m(1).coeff(2) == Fraction(-1, 4)
    assert S.exp_neg_sq_over_m(10).coeff(2) == Fraction(-1, 10)


def test_theta_coeff_exactness_sampled():
    # |a_n| = rho^{n^2} exactly, including a large index
    rho = Fraction(1, 3)
    th = S.theta_series(rho=rho, signs="alternating")
    for n in (0, 1, 2, 10, 100, 1000):
        v = th.coeff(n)
        assert v == (-1) ** (n % 2) * rho ** (n * n)


def test_theta_sqrt_rho_exact():
    th = S.theta_series(rho2=Fraction(1, 2))
    # even index: rational; odd index: pure sqrt part
    assert th.coeff(2) == Fraction(1, 4)
    a1 = th.coeff(1)
    from boundedseries.exactnum import QuadVal

    assert isinstance(a1, QuadVal) and a1.a == 0 and a1.b == 1 \
        and a1.d == Fraction(1, 2)  # a_1 = sqrt(1/2), one radical
    assert th.abs2(1) == Fraction(1, 2)


def test_poly_gaussian_head_matches_polynomial():
    # p(x) exp(-x^{2n}) reproduces p's coefficients up to degree n
    p = [Fraction(2), Fraction(-1, 3), Fraction(5)]
    s = S.poly_gaussian(p, 2)
    for i, c in enumerate(p):
        assert s.coeff(i) == c
    assert s.coeff(4) == -p[0]  # first correction term at degree 2n


def test_user_tail_undefined():
    s = S.user_tail([1, 2], fn=None)
    assert s.coeff(1) == 2
    with pytest.raises(UndefinedCoefficientError):
        s.coeff(5)


def test_coeff_api_with_precision():
    s = S.sin_series()
    val, err = S.coeff(s, 3, precision=128)
    with mp.workprec(160):
        assert abs(val + mp.mpf(1) / 6) <= err


# ---------------------------------------------------------------------------
# evaluation


def test_eval_gaussian_at_zero():
    r = evaluate(S.gaussian(1, 0), 0, 5, 128)
    assert r.value == 1
    assert r.certified and r.error < mp.mpf(2) ** -100


def test_eval_sin_vs_independent_oracle():
    r = evaluate(S.sin_series(), 1, 25, 128)
    with mp.workprec(320):
        true = mp.sin(1)
        # truncating at N=25 leaves exactly the 1/27! term ~ 9.2e-29
        assert abs(r.value - true) < mp.mpf("1e-28")
        assert abs(r.value - true) <= r.error
    assert r.certified
    # at a truncation matching the advertised tolerance the value is tighter
    r2 = evaluate(S.sin_series(), 1, 31, 128)
    with mp.workprec(320):
        assert abs(r2.value - mp.sin(1)) < mp.mpf("1e-30")


def test_eval_theta_partial_lower_bound():
    # terms 3^{n - n^2} are maximized at n in {0, 1}; partial sum >= 2
    r = evaluate(S.theta_series(rho=Fraction(1, 3)), 3, 10, 128)
    assert r.value >= 2
    # brute-force partial sum oracle
    with mp.workprec(200):
        brute = sum(mp.mpf(3) ** (n - n * n) for n in range(0, 40))
        assert abs(r.value - brute) <= r.error + mp.mpf("1e-30")


@pytest.mark.parametrize("maker,x,N", [
    (lambda: S.sin_series(), Fraction(3, 2), 40),
    (lambda: S.gaussian(1, 0), 2, 60),
    (lambda: S.theta_series(rho=Fraction(1, 3)), 9, 50),
    (lambda: S.sin_scaled(3), Fraction(1, 2), 40),
    (lambda: S.exp_neg_sq_over_m(10), 3, 60),
    (lambda: S.bell_egf(), 1, 80),
])
def test_eval_certification_invariant(maker, x, N):
    # |value - oracle| <= error with the oracle at 4x precision and 4x N
    s = maker()
    r = evaluate(s, x, N, 128)
    oracle = evaluate(s, x, 4 * N, 512)
    with mp.workprec(600):
        assert abs(r.value - oracle.value) <= r.error + oracle.error


def test_eval_horner_and_exact_agree():
    s = S.sin_series()
    a = evaluate(s, Fraction(7, 3), 60, 192, method="exact")
    b = evaluate(s, Fraction(7, 3), 60, 192, method="horner")
    with mp.workprec(256):
        assert abs(a.value - b.value) <= a.error + b.error


def test_eval_complex_point():
    s = S.exp_neg_2m(1)  # exp(-z^2)
    r = evaluate(s, mpmath.mpc(0, 1), 40, 128)
    with mp.workprec(200):
        assert abs(r.value - mp.e) <= r.error + mp.mpf("1e-30")


def test_eval_uncertified_flag_without_tail():
    s = S.user_tail([1, 1], fn=lambda n: Fraction(0))
    r = evaluate(s, 1, 10, 64)
    assert not r.certified
    assert "uncertified" in r.note


def test_eval_rejects_unaffordable_envelope():
    with pytest.raises(RangeOverflowError):
        evaluate(S.gaussian(1, 0), 10 ** 6, 10 ** 6, 64, method="horner")


# ---------------------------------------------------------------------------
# arithmetic


def test_product_identity_and_inverse():
    sin = S.sin_series()
    one = explicit([1])
    prod = cauchy_product(sin, one)
    for n in range(12):
        assert prod.coeff(n) == sin.coeff(n)
    z = add(sin, scale(sin, -1))
    assert all(z.is_zero(n) for n in range(12))


def test_gaussian_square_is_doubled_lambda():
    g = S.gaussian(1, 0)
    sq = cauchy_product(g, g)
    assert sq.coeff(2) == -2
    g2 = S.gaussian(2, 0)
    for n in range(16):
        assert sq.coeff(n) == g2.coeff(n)


coeff_lists = st.lists(
    st.fractions(min_value=Fraction(-9), max_value=Fraction(9), max_denominator=12),
    min_size=0, max_size=16,
)


@given(coeff_lists, coeff_lists, st.fractions(min_value=Fraction(-5), max_value=Fraction(5), max_denominator=6))
@settings(max_examples=60, deadline=None)
def test_arith_vs_bruteforce_oracle(a, b, c):
    sa, sb = explicit(a), explicit(b)
    # oracle: plain list convolution / pointwise ops
    n_max = len(a) + len(b) + 2

    def at(lst, i):
        return lst[i] if i < len(lst) else Fraction(0)

    s_add = add(sa, sb)
    s_mul = cauchy_product(sa, sb)
    s_scl = scale(sa, c)
    for n in range(n_max):
        assert s_add.coeff(n) == at(a, n) + at(b, n)
        assert s_scl.coeff(n) == c * at(a, n)
        conv = sum(at(a, k) * at(b, n - k) for k in range(n + 1))
        assert s_mul.coeff(n) == conv


def test_young_convolution_bound():
    # l1(product, 2N) <= (l1_s + tail)(l1_t + tail), all certified
    pairs = [
        (S.sin_series(), S.cos_series()),
        (S.gaussian(1, 0), S.sin_scaled(2)),
        (S.theta_series(rho=Fraction(1, 3)), S.gaussian(Fraction(1, 2), 1)),
    ]
    N = 24
    for s, t in pairs:
        ls = l1_norm(s, N, 128)
        lt = l1_norm(t, N, 128)
        lp = l1_norm(cauchy_product(s, t), 2 * N, 128)
        with mp.workprec(160):
            lhs = lp.partial
            rhs = (ls.partial + ls.tail_bound + ls.partial_error) * \
                  (lt.partial + lt.tail_bound + lt.partial_error)
            assert lhs <= rhs + lp.partial_error


# ---------------------------------------------------------------------------
# norms


def test_l1_norm_values():
    r = l1_norm(S.sin_scaled(1), 41, 192)
    with mp.workprec(256):
        true = mp.sinh(1)
        assert abs(r.partial - true) <= r.tail_bound + r.partial_error
        assert abs(r.partial - true) < mp.mpf("1e-40")
    z = l1_norm(explicit([0, 0, 0]), 10, 64)
    assert z.partial == 0 and z.tail_bound == 0
    e = l1_norm(S.gaussian(1, 0), 80, 192)
    with mp.workprec(256):
        assert abs(e.partial - mp.e) <= e.tail_bound + e.partial_error + mp.mpf("1e-40")


def test_sup_norm_estimates():
    r = sup_norm_estimate(S.sin_series(), "R", prec=192)
    with mp.workprec(256):
        assert r.lower >= 1 - mp.mpf("1e-20")
        assert r.lower <= 1  # |sin| never exceeds 1
    c = sup_norm_estimate(explicit([Fraction(-7, 2)]), "R", prec=96)
    with mp.workprec(128):
        assert abs(c.lower - mp.mpf("3.5")) < mp.mpf("1e-20")
    # distance of exp(-x^2/10) to the constant 1 approaches 1 on R
    diff = add(explicit([1]), scale(S.exp_neg_sq_over_m(10), -1))
    d = sup_norm_estimate(diff, (0, 12), prec=128)
    assert d.lower >= mp.mpf("0.99")


# ---------------------------------------------------------------------------
# head recovery


def test_recover_head_gaussian():
    g = S.gaussian(1, 0)
    sched = list(range(10, 34, 2))
    r2 = recover_head(g, 2, sched, 512)
    with mp.workprec(600):
        assert r2.status == "converged"
        assert abs(r2.value + 1) < mp.mpf("1e-20")
    r1 = recover_head(g, 1, sched, 512)
    with mp.workprec(600):
        assert abs(r1.value) < mp.mpf("1e-20")


def test_recover_head_sin_returns_one():
    r = recover_head(S.sin_series(), 1, [50, 100], 1024)
    assert r.status == "converged"
    with mp.workprec(128):
        assert abs(r.value - 1) < mp.mpf("0.05")


def test_recover_head_flags_unbounded_input():
    r = recover_head(explicit([0, 0, 1]), 1, [10, 20, 40, 80], 128)
    assert r.status == "no-limit"


def test_recover_head_validates_schedule():
    with pytest.raises(ValueError):
        recover_head(S.sin_series(), 1, [10], 64)
    with pytest.raises(ValueError):
        recover_head(S.sin_series(), 1, [10, 5], 64)
    with pytest.raises(ValueError):
        recover_head(S.sin_series(), 0, [10, 20], 64)


# ---------------------------------------------------------------------------
# serialization


@pytest.mark.parametrize("maker", [
    lambda: S.explicit([1, Fraction(-1, 2), 0]),
    lambda: S.gaussian(Fraction(2, 3), 1),
    lambda: S.poly_gaussian([1, Fraction(1, 2)], 2),
    lambda: S.sin_series(),
    lambda: S.cos_series(),
    lambda: S.sin_scaled(4),
    lambda: S.exp_neg_2m(3),
    lambda: S.exp_neg_half_2m(2),
    lambda: S.exp_neg_sq_over_m(7),
    lambda: S.theta_series(rho=Fraction(1, 3), signs="alternating"),
    lambda: S.theta_series(rho2=Fraction(1, 2), signs=S.hash_signs(11)),
    lambda: S.bell_egf(),
    lambda: S.add(S.sin_series(), S.cos_series()),
    lambda: S.scale(S.sin_series(), Fraction(3, 7)),
    lambda: S.cauchy_product(S.gaussian(1, 0), S.sin_series()),
    lambda: S.alternate_flip(S.theta_series(rho=Fraction(1, 3))),
])
def test_json_roundtrip(maker):
    s = maker()
    s2 = series_from_json(series_to_json(s))
    for n in range(24):
        assert s.coeff(n) == s2.coeff(n), n


def test_json_rejects_user_tail_and_garbage():
    from boundedseries.bigreal import BoundedSeriesError

    with pytest.raises(BoundedSeriesError):
        series_to_json(S.user_tail([1]))
    with pytest.raises(ValueError):
        series_from_json({"rule": "nope"})
    with pytest.raises(ValueError):
        series_from_json([1, 2])


def test_shifted_serialization_and_flatten():
    from boundedseries.shift import shift

    s = shift(shift(S.sin_series(), 1), 1)
    j = series_to_json(s)
    assert j["k"] == 2  # nested shifts flatten
    s2 = series_from_json(j)
    for n in range(10):
        assert s2.coeff(n) == S.sin_series().coeff(n + 2)
