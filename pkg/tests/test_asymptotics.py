from fractions import Fraction as F

import mpmath
import pytest

from sepkit.asymptotics import (StudyResult, external_fit, log_ratio_study, ratio_study_alpha,
                                rebit_loglog_study, unit_slope_study)
from sepkit.numerics import DomainError, PrecReal


def test_ratio_study_k_minus1():
    r = ratio_study_alpha(-1, 101)
    assert len(r.table) == 100
    assert mpmath.nstr(r.terminal.value, 6) == "0.41981"
    assert mpmath.nstr(r.reference.value, 6) == "0.421875"


def test_ratio_study_k0_terminal():
    r = ratio_study_alpha(0, 101)
    # within one part in 10^4 of the k = -1 value and below 27/64
    assert abs(r.terminal.value - mpmath.mpf("0.41981")) < 1e-4
    assert r.terminal.value < r.reference.value


def test_ratio_study_reports_monotonicity():
    r = ratio_study_alpha(1, 30)
    ratios = [y.value for _, y in r.table]
    increasing = all(b > a for a, b in zip(ratios, ratios[1:]))
    assert increasing == ("ratios are not strictly decreasing in alpha" in r.notes)


def test_rebit_slope():
    s = rebit_loglog_study(200)
    assert abs(s.fit[0].value - mpmath.mpf("-0.523280")) <= 1e-4
    assert mpmath.nstr(s.reference.value, 6) == "-0.523248"
    assert s.fit[2] > 0.9999
    short = rebit_loglog_study(20)
    assert abs(short.fit[0].value - short.reference.value) < 0.02


def test_log_ratio():
    r = log_ratio_study(200)
    assert abs(r.terminal.value - mpmath.mpf(16) / 27) < 0.01
    assert mpmath.nstr(r.reference.value, 6) == "0.592593"
    tail = [abs(y.value - r.reference.value) for x, y in r.table[49:]]
    assert all(b <= a for a, b in zip(tail, tail[1:]))


def test_unit_slope_exact():
    r = unit_slope_study(1, 3)
    first = r.table[0][1].value
    with mpmath.workdps(40):
        assert abs(first - mpmath.mpf(1553 * 286) / (8398 * 45)) < mpmath.mpf(10) ** -25


def test_unit_slope_table_hook():
    table = {k: F(1, k + 1) for k in range(1, 12)}
    r = unit_slope_study(1, 10, source="table", table=table)
    assert r.fit is not None
    with pytest.raises(DomainError):
        unit_slope_study(1, 10, source="table", table={1: F(1)})
    with pytest.raises(DomainError):
        unit_slope_study(1, 41)


def test_unit_slope_warns_on_poor_points():
    est = lambda k: PrecReal(mpmath.mpf(1) / (k + 1), 30, mpmath.mpf("0.01"))
    with pytest.warns(RuntimeWarning):
        unit_slope_study(1, 3, source="estimator", estimator=est)


def test_external_fit_and_empty():
    r = external_fit("line", [(0, 1), (1, 3), (2, 5)])
    assert abs(r.fit[0].value - 2) < 1e-25
    with pytest.raises(DomainError):
        StudyResult("empty", ())


def test_bad_ranges():
    with pytest.raises(DomainError):
        ratio_study_alpha(5, 20)
    with pytest.raises(DomainError):
        rebit_loglog_study(5)
