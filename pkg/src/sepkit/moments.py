"""Exact moments of D = |rho^PT| - |rho| and of |rho^PT| as terminating
hypergeometric sums.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import gmpy2

from .numerics import PoleError, DomainError, pochhammer, to_fraction


@dataclass(frozen=True)
class MomentRequest:
    k: int
    alpha: Fraction
    n: int

    def __post_init__(self):
        object.__setattr__(self, "alpha", to_fraction(self.alpha))
        _check_args(self.k, self.alpha, self.n)


@dataclass(frozen=True)
class MomentSequence:
    k: int
    alpha: Fraction
    values: tuple[Fraction, ...]

    @property
    def N(self) -> int:
        return len(self.values) - 1


def _check_args(k: int, alpha: Fraction, n: int):
    if k < -1:
        raise DomainError(f"k must be >= -1, got {k}")
    if alpha <= 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    if n < 0:
        raise DomainError(f"moment order must be nonnegative, got {n}")


def terminating_sum(upper: Sequence[Fraction], lower: Sequence[Fraction], z=Fraction(1),
                    max_terms: int | None = None) -> Fraction:
    """Exact value of a pFq series that terminates through a nonpositive-integer
    upper parameter.  Lower parameters that vanish before termination raise PoleError."""
    total, term, j = Fraction(0), Fraction(1), 0
    while True:
        total += term
        if max_terms is not None and j + 1 >= max_terms:
            raise DomainError("series did not terminate within the term budget")
        num, den = Fraction(1), Fraction(j + 1)
        for u in upper:
            num *= u + j
        if num == 0:
            return total
        for l in lower:
            if l + j == 0:
                raise PoleError(f"lower parameter {l} vanishes at series index {j + 1}")
            den *= l + j
        term = term * num / den * z
        j += 1


def _check_lower_pochhammer(x: Fraction, n: int, label: str):
    if x.denominator == 1 and x <= 0 and x + n - 1 >= 0:
        raise PoleError(f"lower factor {label} = ({x})_{n} vanishes")


def d_moment(k: int, alpha, n: int) -> Fraction:
    """<|rho|^k (|rho^PT| - |rho|)^n> / <|rho|^k>, exactly."""
    a = to_fraction(alpha)
    _check_args(k, a, n)
    if n == 0:
        return Fraction(1)
    half = Fraction(1, 2)
    x = n + 2 * k + 2 + 5 * a
    l1, l2 = k + 3 * a + Fraction(3, 2), 2 * k + 6 * a + Fraction(5, 2)
    _check_lower_pochhammer(l1, n, "(k+3α+3/2)_n")
    _check_lower_pochhammer(l2, 2 * n, "(2k+6α+5/2)_2n")
    pref = (-1) ** n * pochhammer(a, n) * pochhammer(a + half, n) * pochhammer(x, n) \
        / (16 ** n * pochhammer(l1, n) * pochhammer(l2, 2 * n))
    upper = [Fraction(-n, 2), Fraction(1 - n, 2), k + 1 + a, k + 1 + 2 * a]
    lower = [1 - n - a, half - n - a, x]
    return pref * terminating_sum(upper, lower, max_terms=n // 2 + 2)


def pt_moment_hs(alpha, n: int) -> Fraction:
    """<|rho^PT|^n> under the Hilbert-Schmidt measure (k = 0).

    n = 0 returns 1 by definition; the closed expression itself gives 2 there.
    """
    a = to_fraction(alpha)
    _check_args(0, a, n)
    if n == 0:
        return Fraction(1)
    half = Fraction(1, 2)
    l1, l2 = 3 * a + Fraction(3, 2), 6 * a + Fraction(5, 2)
    _check_lower_pochhammer(l1, n, "(3α+3/2)_n")
    _check_lower_pochhammer(l2, 2 * n, "(6α+5/2)_2n")
    common = pochhammer(l1, n) * pochhammer(l2, 2 * n)
    first = pochhammer(Fraction(1), n) * pochhammer(a + 1, n) * pochhammer(2 * a + 1, n) / (2 ** (6 * n) * common)
    second = pochhammer(-2 * n - 1 - 5 * a, n) * pochhammer(a, n) * pochhammer(a + half, n) / (2 ** (4 * n) * common)
    upper = [Fraction(-(n - 2), 2), Fraction(-(n - 1), 2), Fraction(-n), a + 1, 2 * a + 1]
    lower = [Fraction(1 - n), n + 2 + 5 * a, 1 - n - a, half - n - a]
    return first + second * terminating_sum(upper, lower, max_terms=n + 2)


def moment_sequence(k: int, alpha, N: int) -> MomentSequence:
    """d_moment(k, alpha, n) for n = 0..N, each computed independently."""
    a = to_fraction(alpha)
    _check_args(k, a, N)
    values = []
    for n in range(N + 1):
        try:
            values.append(d_moment(k, a, n))
        except (PoleError, DomainError) as exc:
            raise type(exc)(f"n={n}: {exc}") from exc
    return MomentSequence(k, a, tuple(values))


def hankel_is_psd(values: Sequence[Fraction]) -> bool:
    """Exact positive-semidefiniteness test of the Hankel matrix [mu_{i+j}].

    Uses symmetric Gaussian elimination with zero-pivot handling; a matrix is
    PSD iff every pivot is >= 0 and zero pivots have zero rows.
    """
    m = (len(values) - 1) // 2 + 1
    A = [[Fraction(values[i + j]) for j in range(m)] for i in range(m)]
    for p in range(m):
        piv = A[p][p]
        if piv < 0:
            return False
        if piv == 0:
            if any(A[p][j] != 0 for j in range(p + 1, m)):
                return False
            continue
        for i in range(p + 1, m):
            f = A[i][p] / piv
            if f:
                for j in range(p, m):
                    A[i][j] -= f * A[p][j]
    return True


def d_moments_float(k: int, alpha, N: int, bits: int) -> list:
    """d_moment(k, alpha, n), n = 0..N, as gmpy2 mpfr at ``bits`` of precision.

    All terms of the inner series share one sign, so Horner summation loses
    at most a few ulps per moment.
    """
    a = to_fraction(alpha)
    _check_args(k, a, N)
    p, d = a.numerator, a.denominator
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        out = [gmpy2.mpfr(1)]
        pref = gmpy2.mpfr(1)
        for n in range(1, N + 1):
            m = n - 1
            r = (Fraction(p + m * d, d) * Fraction(2 * p + (2 * m + 1) * d, 2 * d)
                 * Fraction((2 * m + 2 * k + 2) * d + 5 * p, d) * Fraction((2 * m + 2 * k + 3) * d + 5 * p, d)
                 / Fraction((m + 2 * k + 2) * d + 5 * p, d)
                 / (16 * Fraction((2 * k + 3 + 2 * m) * d + 6 * p, 2 * d)
                    * Fraction((4 * k + 5 + 4 * m) * d + 12 * p, 2 * d)
                    * Fraction((4 * k + 7 + 4 * m) * d + 12 * p, 2 * d)))
            if r == 0:
                raise PoleError(f"n={n}: prefactor vanishes")
            pref = -pref * r.numerator / r.denominator
            s = gmpy2.mpfr(1)
            for j in range(n // 2, 0, -1):
                jj = j - 1
                num = d * (2 * jj - n) * (1 - n + 2 * jj) * ((k + 1 + jj) * d + p) * ((k + 1 + jj) * d + 2 * p)
                den = 2 * ((1 - n + jj) * d - p) * ((1 - 2 * n + 2 * jj) * d - 2 * p) * ((n + 2 * k + 2 + jj) * d + 5 * p) * j
                if den == 0:
                    raise PoleError(f"n={n}: lower parameter vanishes at series index {j}")
                s = 1 + s * num / den
            out.append(pref * s)
    return out
