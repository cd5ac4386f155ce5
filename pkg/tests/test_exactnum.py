from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from boundedseries.exactnum import (
    ExactArithmeticError,
    QC,
    QuadVal,
    exact_sqrt,
    ex_abs2,
    ex_sign,
    format_rational,
    parse_rational,
)


def test_parse_format_roundtrip():
    assert parse_rational("3/7") == Fraction(3, 7)
    assert parse_rational("-2") == Fraction(-2)
    assert parse_rational("0.25") == Fraction(1, 4)
    assert format_rational(Fraction(3, 7)) == "3/7"
    assert format_rational(Fraction(-2)) == "-2"


def test_exact_sqrt():
    assert exact_sqrt(Fraction(9, 4)) == Fraction(3, 2)
    assert exact_sqrt(Fraction(0)) == 0
    assert exact_sqrt(Fraction(2)) is None
    with pytest.raises(ValueError):
        exact_sqrt(Fraction(-1))


rationals = st.fractions(
    min_value=Fraction(-50), max_value=Fraction(50), max_denominator=40
)


@given(rationals, rationals, rationals, rationals)
@settings(max_examples=60, deadline=None)
def test_qc_matches_complex_arithmetic(a, b, c, d):
    u, v = QC(a, b), QC(c, d)
    zu, zv = complex(a) + 1j * complex(b), complex(c) + 1j * complex(d)
    s = u * v
    assert abs(complex(float(s.re), float(s.im)) - zu * zv) < 1e-6
    t = u + v
    assert t.re == a + c and t.im == b + d
    assert u.abs2() == a * a + b * b


def test_quadval_collapses_perfect_square_radicand():
    v = QuadVal(1, 2, Fraction(9, 4))  # 1 + 2*sqrt(9/4) = 4
    assert v.is_rational and v.rational_value() == 4


@given(rationals, rationals, rationals, rationals)
@settings(max_examples=60, deadline=None)
def test_quadval_arithmetic_matches_floats(a1, b1, a2, b2):
    d = Fraction(2)
    import math

    u = QuadVal(a1, b1, d)
    v = QuadVal(a2, b2, d)
    fu = float(a1) + float(b1) * math.sqrt(2)
    fv = float(a2) + float(b2) * math.sqrt(2)
    w = u * v
    fw = float(w.a) + float(w.b) * math.sqrt(2)
    assert abs(fw - fu * fv) < 1e-6 * (1 + abs(fu * fv))
    sgn = u.sign()
    assert (sgn == 0 and abs(fu) < 1e-9) or sgn == (1 if fu > 0 else -1) or abs(fu) < 1e-9


def test_quadval_division_roundtrip():
    u = QuadVal(3, Fraction(1, 2), 5)
    v = QuadVal(-1, 2, 5)
    w = (u / v) * v
    assert w == u
    with pytest.raises(ZeroDivisionError):
        u / QuadVal(0, 0, 5)


def test_quadval_sign_exact_near_cancellation():
    # 7/5 vs sqrt(2): 7/5 < sqrt(2) since 49/25 < 2
    assert QuadVal(Fraction(-7, 5), 1, 2).sign() == 1
    assert QuadVal(Fraction(7, 5), -1, 2).sign() == -1
    # 17/12 > sqrt(2) since 289/144 > 2
    assert QuadVal(Fraction(17, 12), -1, 2).sign() == 1


def test_quadval_radicand_mixing_raises():
    with pytest.raises(ExactArithmeticError):
        QuadVal(0, 1, 2) + QuadVal(0, 1, 3)


def test_quadval_comparisons():
    assert QuadVal(0, 1, 2) > 1
    assert QuadVal(0, 1, 2) < Fraction(3, 2)
    assert abs(QuadVal(0, -1, 2)) == QuadVal(0, 1, 2)


def test_ex_helpers():
    assert ex_abs2(QC(3, 4)) == 25
    assert ex_sign(Fraction(-3)) == -1
    assert ex_sign(QuadVal(0, 1, 2)) == 1
    v = QuadVal(0, 1, 2)
    assert ex_abs2(v) == 2  # (sqrt 2)^2 collapses to a rational
