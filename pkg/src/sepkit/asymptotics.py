"""Asymptotic studies of the separability probabilities: ratio limits in
alpha, the two-rebit log(-log P) slope, log-ratio limits in k and the
k times ratio study.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import mpmath
from mpmath import mpf

from . import closedforms as cf
from .numerics import DomainError, PrecReal, linear_fit
from . import recurrence

RATIO_LIMIT = Fraction(27, 64)
LOG_RATIO_LIMIT = Fraction(16, 27)


@dataclass(frozen=True)
class StudyResult:
    name: str
    table: tuple[tuple[PrecReal, PrecReal], ...]
    fit: tuple[PrecReal, PrecReal, float] | None = None
    reference: PrecReal | None = None
    deviation: PrecReal | None = None
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.table:
            raise DomainError("study table is empty")

    @property
    def terminal(self) -> PrecReal:
        return self.table[-1][1]

    def rows(self) -> list[tuple[str, str]]:
        return [(x.to_string(), y.to_string()) for x, y in self.table]

    def summary(self) -> dict:
        out = {"study": self.name, "points": len(self.table), "terminal": self.terminal.to_string()}
        if self.fit is not None:
            out.update(slope=self.fit[0].to_string(), intercept=self.fit[1].to_string(), r_squared=self.fit[2])
        if self.reference is not None:
            out["reference"] = self.reference.to_string()
        if self.deviation is not None:
            out["deviation"] = self.deviation.to_string()
        if self.notes:
            out["notes"] = list(self.notes)
        return out


def _exact(x, precision: int) -> PrecReal:
    return PrecReal.exact(x, precision)


def _fitted(name, table, precision, reference=None, notes=()) -> StudyResult:
    fit = None
    if len(table) >= 2:
        slope, intercept, r2 = linear_fit(table, precision)
        fit = (PrecReal(slope, precision), PrecReal(intercept, precision), float(r2))
    dev = None
    if reference is not None and fit is not None:
        dev = fit[0] - reference
    return StudyResult(name, tuple(table), fit, reference, dev, tuple(notes))


def ratio_study_alpha(k: int, alpha_max: int, precision: int = 30) -> StudyResult:
    """Q(k, a+1)/Q(k, a) for a = 1..alpha_max-1 from exact values."""
    if k not in range(-1, 5):
        raise DomainError("exact route covers -1 <= k <= 4")
    if alpha_max < 10:
        raise DomainError("alpha_max must be at least 10")
    qs = recurrence.q_exact_sequence(k, alpha_max)
    table = [(_exact(a, precision), _exact(qs[a] / qs[a - 1], precision)) for a in range(1, alpha_max)]
    ref = _exact(RATIO_LIMIT, precision)
    notes = []
    ratios = [qs[a] / qs[a - 1] for a in range(1, alpha_max)]
    if any(r2 >= r1 for r1, r2 in zip(ratios, ratios[1:])):
        notes.append("ratios are not strictly decreasing in alpha")
    return StudyResult(f"ratio_alpha_k{k}", tuple(table), None, ref, table[-1][1] - ref, tuple(notes))


def _rebit_log(k: int, precision: int) -> PrecReal:
    p = cf.rebit_total_prob(k)
    with mpmath.workdps(precision + 20):
        v = mpmath.log(mpf(p.numerator) / p.denominator)
        return PrecReal(v, precision, abs(v) * mpf(10) ** -precision)


def rebit_loglog_study(k_max: int, precision: int = 50) -> StudyResult:
    """log(-log P_k) against k for the two-rebit total probabilities."""
    if k_max < 10:
        raise DomainError("k_max must be at least 10")
    table = []
    for k in range(1, k_max + 1):
        lp = _rebit_log(k, precision)
        with mpmath.workdps(precision + 20):
            v = mpmath.log(-lp.value)
            # d log(-x) = dx / x
            table.append((_exact(k, precision), PrecReal(v, precision, lp.error / abs(lp.value) + abs(v) * mpf(10) ** -precision)))
    with mpmath.workdps(precision + 20):
        v = mpmath.log(mpf(16) / 27)
        ref = PrecReal(v, precision, abs(v) * mpf(10) ** -precision)
    return _fitted("rebit_loglog", table, precision, ref)


def log_ratio_study(k_max: int, precision: int = 50) -> StudyResult:
    """log P_{k+1} / log P_k for the two-rebit total probabilities."""
    if k_max < 10:
        raise DomainError("k_max must be at least 10")
    logs = [_rebit_log(k, precision) for k in range(1, k_max + 2)]
    table = [(_exact(k, precision), logs[k] / logs[k - 1]) for k in range(1, k_max + 1)]
    ref = _exact(LOG_RATIO_LIMIT, precision)
    return StudyResult("log_ratio", tuple(table), None, ref, table[-1][1] - ref)


def unit_slope_study(alpha, k_max: int, source: str = "exact", precision: int = 30,
                     table: Mapping[int, object] | None = None,
                     estimator: Callable[[int], PrecReal] | None = None) -> StudyResult:
    """k R(k) against k with R(k) = Q(k+1, alpha)/Q(k, alpha).

    source="exact" uses the exact route (integer alpha, k + 1 <= 4);
    source="table" takes probabilities from ``table`` (k -> value), the hook
    for externally supplied data; source="estimator" calls ``estimator(k)``,
    e.g. a density-route or Monte Carlo evaluation.
    """
    if k_max > 40:
        raise DomainError("k_max must be at most 40")
    values: dict[int, PrecReal] = {}
    for k in range(1, k_max + 2):
        if source == "exact":
            a = Fraction(alpha)
            if a.denominator != 1 or k > 4:
                raise DomainError("exact source needs integer alpha and k_max <= 3")
            values[k] = _exact(recurrence.q_exact(k, int(a)), precision)
        elif source == "table":
            if table is None or k not in table:
                raise DomainError(f"table has no entry for k = {k}")
            v = table[k]
            values[k] = v if isinstance(v, PrecReal) else _exact(v, precision)
        elif source == "estimator":
            values[k] = estimator(k)
        else:
            raise DomainError(f"unknown source {source!r}")
    rows = []
    for k in range(1, k_max + 1):
        r = values[k + 1] / values[k]
        digits = r.certified_digits
        if digits is not None and digits < 4:
            warnings.warn(f"R({k}) has only {digits} certified digits", RuntimeWarning)
        rows.append((_exact(k, precision), _exact(k, precision) * r))
    return _fitted("unit_slope", rows, precision, _exact(1, precision))


def external_fit(name: str, points: Sequence[tuple], precision: int = 30) -> StudyResult:
    """Least-squares fit of user-supplied (x, y) data."""
    table = [(p if isinstance(p, PrecReal) else _exact(p, precision),
              q if isinstance(q, PrecReal) else _exact(q, precision)) for p, q in points]
    return _fitted(name, table, precision)
