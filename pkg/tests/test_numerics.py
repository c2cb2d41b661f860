from fractions import Fraction as F

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from sepkit.numerics import (AmbiguityError, DegenerateError, PoleError, Polynomial, PrecReal,
                             format_rational, gamma, gamma_exact, gamma_ratio_exact, legendre_coeffs,
                             legendre_values, linear_fit, log_gamma, pochhammer, pochhammer_real,
                             poly_gcd, rationalize, simplest_rational_between)


def test_pochhammer_exact():
    assert pochhammer(F(7, 3), 0) == 1
    assert pochhammer(F(3, 2), 2) == F(15, 4)
    assert pochhammer(F(9, 10), 3) == F(4959, 1000)


def test_pochhammer_real_order():
    assert pochhammer_real(1, 1).value == 1
    v = pochhammer_real(F(1, 2), F(1, 2), 40)
    with mpmath.workdps(50):
        assert abs(v.value - 1 / mpmath.sqrt(mpmath.pi)) < mpmath.mpf(10) ** -38
    assert abs(pochhammer_real(F(3, 2), 2).value - mpmath.mpf(15) / 4) < 1e-40


def test_pochhammer_pole():
    with pytest.raises(PoleError):
        pochhammer_real(F(-2), F(1, 2))


def test_gamma_values():
    assert gamma_exact(F(1)) == (F(1), 0)
    assert gamma_exact(F(1, 2)) == (F(1), 1)
    assert gamma_exact(F(9, 2)) == (F(105, 16), 1)
    assert gamma_ratio_exact([F(11, 2)], [F(23, 2)]) == F(64, 14549535)
    with mpmath.workdps(40):
        assert abs(gamma(F(9, 2), 30).value - 105 * mpmath.sqrt(mpmath.pi) / 16) < mpmath.mpf(10) ** -28
        assert abs(log_gamma(100, 30).value - mpmath.loggamma(100)) < mpmath.mpf(10) ** -25
    with pytest.raises(PoleError):
        gamma(0)


def test_legendre():
    t = Polynomial.linear(1, 0)
    assert legendre_coeffs(0) == Polynomial.const(1)
    assert legendre_coeffs(1) == t
    assert legendre_coeffs(2) == Polynomial((F(-1, 2), F(0), F(3, 2)))
    vals = legendre_values(6, F(1, 3))
    assert vals == [legendre_coeffs(j)(F(1, 3)) for j in range(7)]


def test_rationalize_examples():
    assert rationalize(PrecReal.from_digits("0.12121212121212", 14), 10**6) == F(4, 33)
    assert rationalize(PrecReal.exact(F(29, 128)), 1000) == F(29, 128)
    pi = PrecReal.from_digits(mpmath.pi, 10)
    assert rationalize(pi, 10) is None


def test_rationalize_ambiguous():
    # a wide ball holds several fractions with small denominators
    with pytest.raises(AmbiguityError):
        rationalize(PrecReal(mpmath.mpf("0.3"), 10, mpmath.mpf("0.05")), 100)


@given(st.integers(1, 10**5), st.integers(1, 10**5))
@settings(max_examples=200, deadline=None)
def test_rationalize_roundtrip(p, q):
    x = F(p, q)
    v = PrecReal.from_digits(F(x.numerator, x.denominator), 25)
    assert rationalize(v, 10**5) == x


@given(st.fractions(min_value=-10, max_value=10), st.fractions(min_value=0, max_value=1))
def test_simplest_rational_in_interval(lo, w):
    hi = lo + w
    r = simplest_rational_between(lo, hi)
    assert lo <= r <= hi


def test_linear_fit():
    s, i, r2 = linear_fit([(0, 0), (1, 1)])
    assert (s, i, r2) == (1, 0, 1)
    s, i, r2 = linear_fit([(0, 1), (1, 3), (2, 5)])
    assert abs(s - 2) < 1e-40 and abs(i - 1) < 1e-40 and r2 == 1
    with pytest.raises(DegenerateError):
        linear_fit([(1, 1), (1, 2)])


def test_polynomial_ops():
    a = Polynomial((F(-1), F(0), F(1)))  # x^2 - 1
    b = Polynomial((F(1), F(1)))
    q, r = a.divmod(b)
    assert r.is_zero() and q == Polynomial((F(-1), F(1)))
    assert poly_gcd(a, b * Polynomial((F(2), F(1)))) == b
    assert b.divides(a)
    assert str(Polynomial((F(1), F(-2)))) == "-2α + 1"


def test_precreal_arithmetic_keeps_precision():
    a = PrecReal.exact(F(1, 3), 40)
    b = PrecReal.exact(F(1, 7), 40)
    d = a - b
    with mpmath.workdps(60):
        assert abs(d.value - mpmath.mpf(4) / 21) < mpmath.mpf(10) ** -45
    assert (a / b).certified_digits >= 39


def test_format_rational():
    assert format_rational(F(4, 33)) == "4/33"
    assert format_rational(F(3)) == "3"
