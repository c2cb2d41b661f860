"""Legendre-polynomial reconstruction of the law of D = |rho^PT| - |rho|
from its moments, and tail probabilities P(D > c).

Two modes share one formula.  Exact mode keeps every Legendre moment as a
Fraction and is meant for small orders.  Float mode uses gmpy2 at a binary
precision that grows linearly with the order N, because converting raw
moments to Legendre moments cancels roughly 2.6 bits per order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Sequence

import gmpy2
import mpmath
import numpy as np

from .moments import MomentSequence, d_moments_float, moment_sequence
from .numerics import (AmbiguityError, DomainError, PrecReal, legendre_table, legendre_values,
                       rationalize, to_fraction)

BITS_PER_ORDER = 2.6
EXTRA_BITS = 200


@dataclass(frozen=True)
class SupportInterval:
    a: Fraction = Fraction(-1, 16)
    b: Fraction = Fraction(1, 256)

    def __post_init__(self):
        object.__setattr__(self, "a", to_fraction(self.a))
        object.__setattr__(self, "b", to_fraction(self.b))
        if not self.a < self.b:
            raise DomainError(f"support needs a < b, got [{self.a}, {self.b}]")

    @classmethod
    def parse(cls, text: str) -> "SupportInterval":
        a, b = text.split(",")
        return cls(Fraction(a.strip()), Fraction(b.strip()))

    def to_t(self, x: Fraction) -> Fraction:
        """Affine map of [a, b] onto [-1, 1]."""
        return (2 * to_fraction(x) - self.a - self.b) / (self.b - self.a)

    def __str__(self) -> str:
        return f"{self.a},{self.b}"


DEFAULT_SUPPORT = SupportInterval()
# max D over two-qubit states is 1/432 (X states at p = 1/6); the Bell state gives -1/16
TIGHT_SUPPORT = SupportInterval(Fraction(-1, 16), Fraction(1, 432))


@dataclass(frozen=True)
class DensityModel:
    """Legendre expansion f(t) = sum lambda_j P_j(t) of the law of T on [-1, 1]."""

    support: SupportInterval
    degree: int
    coeffs: tuple
    mode: str = "exact"
    bits: int | None = None

    def __post_init__(self):
        if self.mode == "exact" and self.coeffs and self.coeffs[0] != Fraction(1, 2):
            raise DomainError("lambda_0 must equal 1/2 (unit mass)")


@dataclass(frozen=True)
class ProbabilityEstimate:
    value: PrecReal
    degree: int
    half_degree_value: PrecReal
    tail_indicator: float
    extrapolated: PrecReal | None = None
    exact_value: Fraction | None = None
    history: tuple = field(default=(), repr=False)

    @property
    def best(self) -> PrecReal:
        """Extrapolated value when available, otherwise the truncated sum."""
        return self.extrapolated if self.extrapolated is not None else self.value

    def rationalized(self, max_denominator: int = 10**6) -> Fraction | None:
        try:
            return rationalize(self.best, max_denominator)
        except AmbiguityError:
            return None


# ---------------------------------------------------------------- exact mode

def shifted_moments(mu: MomentSequence | Sequence[Fraction], support: SupportInterval = DEFAULT_SUPPORT) -> list[Fraction]:
    """Moments of T = (2X - a - b)/(b - a) from those of X (binomial transform)."""
    values = mu.values if isinstance(mu, MomentSequence) else list(mu)
    if values[0] != 1:
        raise DomainError("moment sequence must start with 1")
    s = 2 / (support.b - support.a)
    o = -(support.a + support.b) / (support.b - support.a)
    out = []
    for n in range(len(values)):
        out.append(sum(comb(n, i) * s**i * o ** (n - i) * values[i] for i in range(n + 1)))
    return out


def legendre_coefficients(t_moments: Sequence[Fraction], support: SupportInterval = DEFAULT_SUPPORT) -> DensityModel:
    """lambda_j = (2j+1)/2 * E[P_j(T)] from the moments of T, exactly."""
    if t_moments[0] != 1:
        raise DomainError("T-moments must start with 1")
    N = len(t_moments) - 1
    table = legendre_table(N)
    lam = tuple(Fraction(2 * j + 1, 2) * sum(c * t_moments[i] for i, c in enumerate(table[j]))
                for j in range(N + 1))
    return DensityModel(support, N, lam, "exact")


def _tail_weights(N: int, tc):
    """w_j with P(T > t_c) = sum_j w_j E[P_j(T)].

    From the antiderivative of P_j: (P_{j+1} - P_{j-1})/(2j+1) for j >= 1.
    """
    P = legendre_values(N + 1, tc)
    return [(1 - tc) / 2] + [(P[j - 1] - P[j + 1]) / 2 for j in range(1, N + 1)]


def _clamp_t(model: DensityModel, c) -> Fraction:
    c = to_fraction(c)
    if c > model.support.b:
        raise DomainError(f"threshold {c} lies right of the support")
    return max(model.support.to_t(c), Fraction(-1))


def tail_probability_exact(model: DensityModel, c=Fraction(0)) -> Fraction:
    if model.mode != "exact":
        raise DomainError("exact tail needs an exact-mode model")
    tc = _clamp_t(model, c)
    w = _tail_weights(model.degree, tc)
    return sum(w[j] * model.coeffs[j] * Fraction(2, 2 * j + 1) for j in range(model.degree + 1))


def tail_probability(model: DensityModel, c=Fraction(0), precision: int = 30) -> PrecReal:
    """P(X > c) from the truncated expansion.  The error field reflects
    arithmetic only; truncation error is not included."""
    if model.mode == "exact":
        return PrecReal.exact(tail_probability_exact(model, c), precision)
    seq = _tail_sequence_float(model, _clamp_t(model, c))
    return PrecReal(_mpfr_to_mpf(seq[-1], precision + 5), precision, None)


# ---------------------------------------------------------------- float mode

def bits_for_order(N: int, digits: int = 30) -> int:
    return int(BITS_PER_ORDER * N) + EXTRA_BITS + int(3.33 * digits)


def legendre_moments_float(mu: Sequence, support: SupportInterval, N: int, bits: int) -> list:
    """E[P_j(T)], j = 0..N, from raw moments (gmpy2 mpfr) by the recurrence
    nu_{j+1,i} = ((2j+1)(s nu_{j,i+1} + o nu_{j,i}) - j nu_{j-1,i})/(j+1),
    where nu_{j,i} = E[X^i P_j(T)] and T = sX + o."""
    s = 2 / (support.b - support.a)
    o = -(support.a + support.b) / (support.b - support.a)
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        prev, cur = None, [gmpy2.mpfr(x) if not isinstance(x, Fraction) else gmpy2.mpfr(x.numerator) / x.denominator
                          for x in mu[: N + 1]]
        out = [cur[0]]
        for j in range(N):
            a1, a0 = Fraction(2 * j + 1, j + 1) * s, Fraction(2 * j + 1, j + 1) * o
            a1n, a1d, a0n, a0d = a1.numerator, a1.denominator, a0.numerator, a0.denominator
            L = N - j
            new = [cur[i + 1] * a1n / a1d + cur[i] * a0n / a0d for i in range(L)]
            if prev is not None:
                cm = Fraction(j, j + 1)
                cn, cd = cm.numerator, cm.denominator
                new = [new[i] - prev[i] * cn / cd for i in range(L)]
            prev, cur = cur, new
            out.append(cur[0])
    return out


def float_model(k: int, alpha, N: int, support: SupportInterval = DEFAULT_SUPPORT, digits: int = 30) -> DensityModel:
    bits = bits_for_order(N, digits)
    mu = d_moments_float(k, alpha, N, bits + 64)
    lm = legendre_moments_float(mu, support, N, bits)
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        lam = tuple(x * (2 * j + 1) / 2 for j, x in enumerate(lm))
    return DensityModel(support, N, lam, "float", bits)


def _tail_sequence_float(model: DensityModel, tc: Fraction) -> list[float]:
    """Partial sums of the tail series for every truncation order 0..N."""
    N = model.degree
    with gmpy2.context(gmpy2.get_context(), precision=model.bits):
        t = gmpy2.mpfr(tc.numerator) / tc.denominator
        w = _tail_weights(N, t)
        acc, seq = gmpy2.mpfr(0), []
        for j in range(N + 1):
            acc += w[j] * model.coeffs[j] * 2 / (2 * j + 1)
            seq.append(acc)
    return seq


def tail_sequence(model: DensityModel, c=Fraction(0)) -> list:
    """P(X > c) truncated at every order M = 0..N."""
    tc = _clamp_t(model, c)
    if model.mode == "exact":
        w = _tail_weights(model.degree, tc)
        out, acc = [], Fraction(0)
        for j in range(model.degree + 1):
            acc += w[j] * model.coeffs[j] * Fraction(2, 2 * j + 1)
            out.append(acc)
        return out
    return _tail_sequence_float(model, tc)


# ---------------------------------------------------------------- extrapolation

def _fit_limit(orders: np.ndarray, vals: np.ndarray, theta: float | None) -> tuple[float, float]:
    """Least-squares fit v(M) = v_inf + M^-p (A + B cos 2M theta + C sin 2M theta),
    scanning p; returns (v_inf, rms residual)."""
    ref = vals[-1]
    y = vals - ref
    best = None
    for p in np.arange(0.5, 5.0, 0.005):
        base = orders ** -p
        cols = [np.ones_like(orders), base]
        if theta is not None:
            cols += [base * np.cos(2 * theta * orders), base * np.sin(2 * theta * orders)]
        X = np.column_stack(cols)
        c, *_ = np.linalg.lstsq(X, y, rcond=None)
        r = float(np.sum((X @ c - y) ** 2))
        if best is None or r < best[0]:
            best = (r, float(c[0]))
    return float(ref) + best[1], math.sqrt(best[0] / len(orders))


def extrapolate(seq: Sequence, tc: Fraction, min_order: int = 64) -> PrecReal | None:
    """Estimate lim_{M->inf} seq[M] from the tail of the truncation sequence.

    The error of the truncated sum decays algebraically and oscillates with
    angular frequency 2*arccos(t_c) in M.  The limit is fitted on orders
    [N/2, N] and again on [N/4, N/2]; the spread of the two fits plus the fit
    residual is reported as the error bound.  This bound is empirical, not
    rigorous.
    """
    N = len(seq) - 1
    if N < min_order:
        return None
    vals = np.array([float(x) for x in seq], dtype=float)
    theta = math.acos(float(tc)) if -1 < tc < 1 else None
    orders = np.arange(N + 1, dtype=float)
    hi = slice(N // 2, N + 1)
    lo = slice(N // 4, N // 2 + 1)
    v1, rms1 = _fit_limit(orders[hi], vals[hi], theta)
    v2, _ = _fit_limit(orders[lo], vals[lo], theta)
    err = abs(v1 - v2) + rms1
    return PrecReal(mpmath.mpf(v1), 15, mpmath.mpf(err))


# ---------------------------------------------------------------- pipeline

def _mpfr_to_mpf(x, digits: int = 30):
    # go through a short decimal string; str() of a wide mpfr can be enormous
    if not x:
        return mpmath.mpf(0)
    m, e, _ = gmpy2.digits(x, 10, digits)
    sign = "-" if m.startswith("-") else ""
    m = m.lstrip("-")
    return mpmath.mpf(f"{sign}0.{m}e{e}")


def _sequence_and_tail(k: int, alpha: Fraction, N: int, support: SupportInterval, c: Fraction,
                       mode: str) -> tuple[list, float, Fraction | None]:
    if mode == "exact":
        mu = moment_sequence(k, alpha, N)
        model = legendre_coefficients(shifted_moments(mu, support), support)
    else:
        model = float_model(k, alpha, N, support)
    tc = _clamp_t(model, c)
    seq = tail_sequence(model, c)
    w = _tail_weights(N, tc if model.mode == "exact" else float(tc))
    tail = abs(float(model.coeffs[N]) * float(w[N]) * 2 / (2 * N + 1))
    exact = seq[-1] if mode == "exact" else None
    if mode == "exact":
        return [mpmath.mpf(x.numerator) / x.denominator for x in seq], tail, exact
    return [_mpfr_to_mpf(x) for x in seq], tail, exact


def estimate_probability(k: int, alpha, N: int, support: SupportInterval = DEFAULT_SUPPORT,
                         precision: int = 8, c=Fraction(0), mode: str = "auto",
                         cache=None) -> ProbabilityEstimate:
    """Moments -> Legendre coefficients -> P(D > c) at truncation order N.

    ``value`` carries the half-degree difference |v_N - v_{N/2}| as its error
    bound, ``extrapolated`` the tail-fit bound; both are diagnostics rather
    than proofs.  Warns when fewer than ``precision`` digits are certified.
    The truncation sequence, the expensive part, is stored in ``cache``.
    """
    alpha, c = to_fraction(alpha), to_fraction(c)
    if N < 2:
        raise DomainError("N must be at least 2")
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    if mode == "auto":
        mode = "exact" if N <= 60 else "float"
    if mode not in ("exact", "float"):
        raise DomainError(f"unknown mode {mode!r}")
    key = {"operation": "tail_sequence", "k": k, "alpha": str(alpha), "N": N,
           "support": str(support), "threshold": str(c), "mode": mode,
           "bits_per_order": BITS_PER_ORDER}
    hit = cache.get(key) if cache is not None else None
    exact = None
    if hit is not None:
        seq = [mpmath.mpf(x) for x in hit["sequence"]]
        tail = hit["tail_indicator"]
        exact = Fraction(hit["exact"]) if hit.get("exact") else None
    else:
        seq, tail, exact = _sequence_and_tail(k, alpha, N, support, c, mode)
        if cache is not None:
            with mpmath.workdps(30):
                cache.put(key, {"sequence": [mpmath.nstr(x, 25) for x in seq], "tail_indicator": tail,
                                "exact": None if exact is None else str(exact)})
    with mpmath.workdps(30):
        vN, vh = seq[-1], seq[N // 2]
        value = PrecReal(vN, 20, abs(vN - vh))
        half = PrecReal(vh, 20, None)
    ext = extrapolate(seq, support.to_t(max(c, support.a)))
    est = ProbabilityEstimate(value, N, half, tail, ext, exact, tuple(float(x) for x in seq))
    digits = est.best.certified_digits or 0
    if digits < precision:
        warnings.warn(f"only {digits} digits certified at N={N} (requested {precision})", RuntimeWarning)
    return est
