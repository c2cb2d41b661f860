from fractions import Fraction as F

import gmpy2
import pytest

from sepkit.moments import (d_moment, d_moments_float, hankel_is_psd, moment_sequence, pt_moment_hs,
                            terminating_sum)
from sepkit.numerics import DomainError, PoleError


def test_d_moment_values():
    assert d_moment(0, 1, 0) == 1
    assert d_moment(0, 1, 1) == F(-2, 969)
    assert d_moment(0, 1, 2) == F(20, 1716099)


def test_pt_moment_values():
    assert pt_moment_hs(1, 0) == 1
    assert pt_moment_hs(1, 1) == F(-7, 3876)


def test_sequence_composition():
    assert moment_sequence(0, 1, 0).values == (F(1),)
    seq = moment_sequence(0, 1, 2)
    assert seq.values == (1, F(-2, 969), d_moment(0, 1, 2))
    assert seq.N == 2


@pytest.mark.parametrize("k,alpha", [(0, F(1)), (0, F(1, 2)), (1, F(1)), (3, F(2)), (-1, F(1))])
def test_first_moment_negative(k, alpha):
    assert moment_sequence(k, alpha, 1).values[1] < 0


def test_even_moments_positive():
    seq = moment_sequence(1, F(1, 2), 10).values
    assert all(seq[n] > 0 for n in range(0, 11, 2))


def test_hankel():
    assert hankel_is_psd(moment_sequence(0, 1, 12).values)
    # a negative second moment cannot come from any distribution
    assert not hankel_is_psd([F(1), F(0), F(-1)])


def test_float_moments_agree_with_exact():
    N = 30
    exact = moment_sequence(0, F(1, 2), N).values
    approx = d_moments_float(0, F(1, 2), N, 300)
    with gmpy2.context(gmpy2.get_context(), precision=400):
        for e, a in zip(exact, approx):
            assert abs(gmpy2.mpq(e.numerator, e.denominator) - a) <= abs(a) * gmpy2.mpfr(2) ** -250


def test_terminating_sum():
    # 2F1(-2, 1; 1; 1) = (1-1)^2 = 0
    assert terminating_sum([F(-2), F(1)], [F(1)]) == 0
    with pytest.raises(PoleError):
        terminating_sum([F(-3)], [F(-1)])


def test_bad_arguments():
    with pytest.raises(DomainError):
        d_moment(0, 0, 1)
    with pytest.raises(DomainError):
        d_moment(0, 1, -1)
