import warnings
from fractions import Fraction as F

import pytest

from sepkit.cache import Cache
from sepkit.density import (DEFAULT_SUPPORT, TIGHT_SUPPORT, SupportInterval, estimate_probability,
                            extrapolate, float_model, legendre_coefficients, shifted_moments,
                            tail_probability, tail_probability_exact, tail_sequence)
from sepkit.moments import moment_sequence
from sepkit.numerics import DomainError

UNIT = SupportInterval(F(-1), F(1))


def uniform_moments(N):
    return [F(1, n + 1) if n % 2 == 0 else F(0) for n in range(N + 1)]


def test_shifted_moments_identity_and_constants():
    assert shifted_moments(uniform_moments(6), UNIT) == uniform_moments(6)
    assert shifted_moments([F(1)] + [F(0)] * 5, UNIT) == [1, 0, 0, 0, 0, 0]
    b = DEFAULT_SUPPORT.b
    assert shifted_moments([b**n for n in range(6)], DEFAULT_SUPPORT) == [1] * 6


def test_legendre_coefficients():
    m = legendre_coefficients(uniform_moments(6), UNIT)
    assert m.coeffs == (F(1, 2),) + (F(0),) * 6
    # density (1+t)/2 on [-1,1]: E[T^n] = 1/(n+1) for even n, 1/(n+2) for odd n
    mom = [F(1, n + 1) if n % 2 == 0 else F(1, n + 2) for n in range(5)]
    m2 = legendre_coefficients(mom, UNIT)
    assert m2.coeffs[0] == F(1, 2) and m2.coeffs[1] == F(1, 2)
    assert all(c == 0 for c in m2.coeffs[2:])


def test_tail_probabilities():
    m = legendre_coefficients(uniform_moments(4), UNIT)
    assert tail_probability_exact(m, 0) == F(1, 2)
    assert tail_probability_exact(m, -1) == 1
    mom = [F(1, n + 1) if n % 2 == 0 else F(1, n + 2) for n in range(5)]
    assert tail_probability_exact(legendre_coefficients(mom, UNIT), 0) == F(3, 4)
    with pytest.raises(DomainError):
        tail_probability_exact(m, 2)


def test_support_parse():
    s = SupportInterval.parse("-1/16, 1/432")
    assert s == TIGHT_SUPPORT
    assert str(DEFAULT_SUPPORT) == "-1/16,1/256"
    with pytest.raises(DomainError):
        SupportInterval(F(1), F(0))


def test_float_matches_exact():
    N = 40
    exact = tail_sequence(legendre_coefficients(shifted_moments(moment_sequence(0, 1, N)), DEFAULT_SUPPORT))
    approx = tail_sequence(float_model(0, 1, N))
    for e, a in zip(exact, approx):
        assert abs(float(e) - float(a)) < 1e-14
    assert abs(float(tail_probability(float_model(0, 1, N))) - float(exact[-1])) < 1e-14


def test_estimate_converges():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        errs = [abs(float(estimate_probability(0, 1, N, TIGHT_SUPPORT).value) - 4 / 33) for N in (50, 200, 800)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 2e-5


def test_extrapolation_bound_covers_truth():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        est = estimate_probability(0, 1, 800, TIGHT_SUPPORT)
    assert est.extrapolated is not None
    assert abs(float(est.extrapolated) - 4 / 33) <= float(est.extrapolated.error)
    assert abs(float(est.extrapolated) - 4 / 33) < abs(float(est.value) - 4 / 33)


def test_extrapolate_short_sequence():
    assert extrapolate([F(1, 2)] * 10, F(0)) is None


def test_warns_when_underresolved():
    with pytest.warns(RuntimeWarning):
        estimate_probability(0, 1, 20, precision=8)


def test_cache_roundtrip(tmp_path):
    cache = Cache(tmp_path)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        a = estimate_probability(0, 1, 80, cache=cache)
        assert len(list(tmp_path.glob("*.json"))) == 1
        b = estimate_probability(0, 1, 80, cache=cache)
    assert a.value.to_string(15) == b.value.to_string(15)
    assert a.history == pytest.approx(b.history, rel=1e-20)


def test_bad_inputs():
    with pytest.raises(DomainError):
        estimate_probability(0, 1, 1)
    with pytest.raises(DomainError):
        estimate_probability(0, 0, 10)
    with pytest.raises(DomainError):
        estimate_probability(0, 1, 10, mode="fast")
