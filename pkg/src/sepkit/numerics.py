"""Exact rationals, precision-tagged reals, gamma/Pochhammer/Legendre helpers,
rational reconstruction and least-squares fitting.

Exact values are ``fractions.Fraction``.  Approximate values are ``PrecReal``:
an mpmath float plus a working precision and an absolute error bound, from
which the number of certified significant digits is derived.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath
from mpmath import mpf

GUARD_DIGITS = 15

Rational = Fraction


class PoleError(ValueError):
    """A gamma or Pochhammer argument hit a nonpositive integer."""


class DomainError(ValueError):
    pass


class AmbiguityError(ValueError):
    """More than one rational with the allowed denominator fits the error ball."""


class DegenerateError(ValueError):
    pass


# ---------------------------------------------------------------- rationals

def to_fraction(x) -> Fraction:
    """Coerce ints, Fractions, "p/q" strings, decimal strings and mpf to Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, mpf):
        return mpf_to_fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x).__name__} to a rational")


def mpf_to_fraction(x: mpf) -> Fraction:
    if not mpmath.isfinite(x):
        raise DomainError(f"non-finite value {x}")
    man, exp = x.man_exp
    man = int(man)
    return Fraction(man * 2**exp) if exp >= 0 else Fraction(man, 2**-exp)


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def is_nonpositive_integer(x: Fraction) -> bool:
    return x.denominator == 1 and x <= 0


# ---------------------------------------------------------------- PrecReal

def _dps_to_prec(dps: int) -> int:
    return int(math.ceil(dps * 3.3219280948873626)) + 8


def _mpf_at(x, dps: int) -> mpf:
    with mpmath.workdps(dps):
        if isinstance(x, Fraction):
            return mpf(x.numerator) / x.denominator
        if isinstance(x, PrecReal):
            return +x.value
        return mpf(x)


@dataclass(frozen=True)
class PrecReal:
    """A real number known to within ``error`` (absolute).

    ``precision`` is the decimal working precision used to produce the value.
    ``error`` is None when no bound is known; ``certified_digits`` is then None.
    """

    value: mpf
    precision: int
    error: mpf | None = None

    @classmethod
    def exact(cls, q, precision: int = 50) -> "PrecReal":
        return cls(_mpf_at(to_fraction(q), precision + GUARD_DIGITS), precision, mpf(0))

    @classmethod
    def from_digits(cls, value, digits: int, precision: int | None = None) -> "PrecReal":
        """Value whose first ``digits`` significant digits are correct.

        The error bound is one unit in the last certified digit.
        """
        precision = max(precision or 0, digits)
        v = _mpf_at(value, precision + GUARD_DIGITS)
        if v == 0:
            return cls(v, precision, mpf(10) ** (-digits))
        lead = int(mpmath.floor(mpmath.log10(abs(v))))
        return cls(v, precision, mpf(10) ** (lead + 1 - digits))

    @property
    def certified_digits(self) -> int | None:
        if self.error is None:
            return None
        if self.error == 0:
            return self.precision
        if self.value == 0:
            return 0
        with mpmath.workdps(30):
            lead = int(mpmath.floor(mpmath.log10(abs(self.value))))
            d = int(mpmath.floor(lead + 1 - mpmath.log10(self.error)))
        return max(0, min(d, self.precision))

    def ball(self) -> tuple[Fraction, Fraction]:
        if self.error is None:
            raise DomainError("error bound unknown")
        v, e = mpf_to_fraction(self.value), mpf_to_fraction(self.error)
        return v - e, v + e

    def __float__(self) -> float:
        return float(self.value)

    def to_string(self, digits: int | None = None) -> str:
        d = self.certified_digits if digits is None else digits
        d = self.precision if d is None else max(d, 1)
        return mpmath.nstr(self.value, d, strip_zeros=False)

    # arithmetic with pessimistic error propagation
    def _coerce(self, other) -> "PrecReal":
        if isinstance(other, PrecReal):
            return other
        return PrecReal.exact(to_fraction(other), self.precision)

    def _round(self, v: mpf, err: mpf | None, prec: int) -> "PrecReal":
        if err is not None:
            err = err + abs(v) * mpf(10) ** (-(prec + GUARD_DIGITS - 1))
        return PrecReal(v, prec, err)

    def __add__(self, other):
        o = self._coerce(other)
        prec = min(self.precision, o.precision)
        with mpmath.workdps(prec + GUARD_DIGITS):
            err = None if self.error is None or o.error is None else self.error + o.error
            return self._round(self.value + o.value, err, prec)

    __radd__ = __add__

    def __neg__(self):
        # mpf negation rounds to the ambient context, so widen it first
        with mpmath.workdps(self.precision + GUARD_DIGITS):
            return PrecReal(-self.value, self.precision, self.error)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        prec = min(self.precision, o.precision)
        with mpmath.workdps(prec + GUARD_DIGITS):
            err = None
            if self.error is not None and o.error is not None:
                err = abs(self.value) * o.error + abs(o.value) * self.error + self.error * o.error
            return self._round(self.value * o.value, err, prec)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        prec = min(self.precision, o.precision)
        with mpmath.workdps(prec + GUARD_DIGITS):
            if o.error is not None and o.error >= abs(o.value):
                raise DomainError("division by an interval containing zero")
            err = None
            if self.error is not None and o.error is not None:
                lo = abs(o.value) - o.error
                err = (abs(self.value) * o.error + abs(o.value) * self.error) / (abs(o.value) * lo)
            return self._round(self.value / o.value, err, prec)

    def __rtruediv__(self, other):
        return self._coerce(other) / self


def as_mpf(x, dps: int) -> mpf:
    return _mpf_at(x, dps)


# ---------------------------------------------------------------- polynomials

@dataclass(frozen=True)
class Polynomial:
    """Dense polynomial in alpha with Fraction coefficients, ascending degree."""

    coeffs: tuple[Fraction, ...]

    def __post_init__(self):
        c = [Fraction(x) for x in self.coeffs]
        while c and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    @classmethod
    def const(cls, c) -> "Polynomial":
        return cls((Fraction(c),))

    @classmethod
    def linear(cls, slope, offset) -> "Polynomial":
        return cls((Fraction(offset), Fraction(slope)))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __add__(self, other: "Polynomial") -> "Polynomial":
        a, b = self.coeffs, other.coeffs
        n = max(len(a), len(b))
        return Polynomial(tuple((a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)))

    def __neg__(self) -> "Polynomial":
        return Polynomial(tuple(-c for c in self.coeffs))

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            return Polynomial(tuple(c * Fraction(other) for c in self.coeffs))
        if self.is_zero() or other.is_zero():
            return Polynomial(())
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return Polynomial(tuple(out))

    __rmul__ = __mul__

    def divmod(self, other: "Polynomial") -> tuple["Polynomial", "Polynomial"]:
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        quo = [Fraction(0)] * max(len(rem) - other.degree, 0)
        lead = other.coeffs[-1]
        for i in range(len(rem) - 1, other.degree - 1, -1):
            f = rem[i] / lead
            if f:
                quo[i - other.degree] = f
                for j, c in enumerate(other.coeffs):
                    rem[i - other.degree + j] -= f * c
        return Polynomial(tuple(quo)), Polynomial(tuple(rem))

    def divides(self, other: "Polynomial") -> bool:
        """True if ``self`` divides ``other`` exactly."""
        return other.divmod(self)[1].is_zero()

    def content(self) -> Fraction:
        if self.is_zero():
            return Fraction(0)
        den = math.lcm(*(c.denominator for c in self.coeffs))
        num = math.gcd(*(c.numerator for c in self.coeffs))
        return Fraction(num, den)

    def primitive(self) -> "Polynomial":
        """Integer coefficients with content 1 and positive leading coefficient."""
        if self.is_zero():
            return self
        c = self.content()
        if self.coeffs[-1] < 0:
            c = -c
        return self * (1 / c)

    def int_coeffs(self) -> list[int]:
        if any(c.denominator != 1 for c in self.coeffs):
            raise DomainError("polynomial has non-integer coefficients")
        return [c.numerator for c in self.coeffs]

    def __str__(self) -> str:
        if self.is_zero():
            return "0"
        parts = []
        for d in range(self.degree, -1, -1):
            c = self.coeffs[d]
            if c == 0:
                continue
            mag = format_rational(abs(c))
            mono = "" if d == 0 else ("α" if d == 1 else f"α^{d}")
            if mono and mag == "1":
                mag = ""
            term = mag + mono if not (mono and "/" in mag) else f"({mag}){mono}"
            parts.append(("- " if c < 0 else "+ ") + term)
        s = " ".join(parts)
        return s[2:] if s.startswith("+ ") else "-" + s[2:]


def poly_gcd(a: Polynomial, b: Polynomial) -> Polynomial:
    """Monic greatest common divisor over the rationals."""
    while not b.is_zero():
        a, b = b, a.divmod(b)[1]
    if a.is_zero():
        return a
    return a * (1 / a.coeffs[-1])


def poly_product(polys: Iterable[Polynomial]) -> Polynomial:
    out = Polynomial.const(1)
    for p in polys:
        out = out * p
    return out


@dataclass(frozen=True)
class AffineParam:
    """slope * alpha + offset."""

    offset: Fraction
    slope: Fraction = Fraction(1)

    def __call__(self, alpha):
        if isinstance(alpha, (Fraction, int)):
            return self.slope * Fraction(alpha) + self.offset
        return alpha * self.slope.numerator / self.slope.denominator + \
            mpf(self.offset.numerator) / self.offset.denominator

    def shifted(self, d) -> "AffineParam":
        return AffineParam(self.offset + Fraction(d), self.slope)

    def as_polynomial(self) -> Polynomial:
        return Polynomial.linear(self.slope, self.offset)

    def __str__(self) -> str:
        a = "α" if self.slope == 1 else f"({format_rational(self.slope)})α"
        if self.offset == 0:
            return a
        sign = "+" if self.offset > 0 else "-"
        return f"{a} {sign} {format_rational(abs(self.offset))}"


# ---------------------------------------------------------------- gamma family

def _check_pole(x: Fraction | mpf, what: str):
    if isinstance(x, Fraction):
        bad = is_nonpositive_integer(x)
    else:
        bad = x <= 0 and mpmath.isint(x)
    if bad:
        raise PoleError(f"{what}: gamma pole at {x}")


def pochhammer(x, n: int):
    """Rising factorial x(x+1)...(x+n-1) for integer n >= 0.

    Exact for Fraction/int input; for PrecReal the result carries a
    propagated error bound.
    """
    if n < 0:
        raise DomainError("pochhammer order must be nonnegative")
    if isinstance(x, PrecReal):
        acc = PrecReal.exact(1, x.precision)
        for i in range(n):
            acc = acc * (x + i)
        return acc
    x = to_fraction(x)
    num, den = 1, 1
    p, q = x.numerator, x.denominator
    for i in range(n):
        num *= p + i * q
        den *= q
    return Fraction(num, den)


def pochhammer_real(x, order, precision: int = 50) -> PrecReal:
    """Gamma(x+order)/Gamma(x) with real (possibly non-integer) order."""
    dps = precision + GUARD_DIGITS
    xv, ov = _mpf_at(x, dps), _mpf_at(order, dps)
    with mpmath.workdps(dps):
        _check_pole(xv, "pochhammer_real lower argument")
        _check_pole(xv + ov, "pochhammer_real upper argument")
        v = mpmath.rf(xv, ov)
    return _certified(v, precision)


def _certified(v: mpf, precision: int) -> PrecReal:
    with mpmath.workdps(precision + GUARD_DIGITS):
        err = abs(v) * mpf(10) ** (-precision)
    return PrecReal(v, precision, err)


def gamma(x, precision: int = 50) -> PrecReal:
    dps = precision + GUARD_DIGITS
    xv = _mpf_at(x, dps)
    with mpmath.workdps(dps):
        _check_pole(xv, "gamma")
        v = mpmath.gamma(xv)
    return _certified(v, precision)


def log_gamma(x, precision: int = 50) -> PrecReal:
    dps = precision + GUARD_DIGITS
    xv = _mpf_at(x, dps)
    with mpmath.workdps(dps):
        if xv <= 0:
            raise DomainError(f"log_gamma requires x > 0, got {x}")
        v = mpmath.loggamma(xv)
        err = mpf(10) ** (-precision) * max(abs(v), mpf(1))
    return PrecReal(v, precision, err)


def gamma_exact(x) -> tuple[Fraction, int]:
    """Gamma at a positive integer or half-integer as (r, e) meaning r * sqrt(pi)**e."""
    x = to_fraction(x)
    if x.denominator == 1:
        if x <= 0:
            raise PoleError(f"gamma pole at {x}")
        return Fraction(math.factorial(x.numerator - 1)), 0
    if x.denominator == 2:
        n = x - Fraction(1, 2)  # Gamma(n + 1/2)
        if n >= 0:
            n = n.numerator
            return Fraction(math.factorial(2 * n), 4**n * math.factorial(n)), 1
        # reflect upward: Gamma(x) = Gamma(x + m) / (x)_m
        m = int(-n)
        r, e = gamma_exact(x + m)
        return r / pochhammer(x, m), e
    raise DomainError(f"no exact gamma value at {x}")


def gamma_ratio_exact(num: Sequence, den: Sequence) -> Fraction:
    """prod Gamma(num) / prod Gamma(den) for integer/half-integer arguments.

    The powers of sqrt(pi) must cancel.
    """
    r, e = Fraction(1), 0
    for x in num:
        a, b = gamma_exact(x)
        r, e = r * a, e + b
    for x in den:
        a, b = gamma_exact(x)
        r, e = r / a, e - b
    if e != 0:
        raise DomainError("gamma ratio is not rational (sqrt(pi) does not cancel)")
    return r


def legendre_coeffs(j: int) -> Polynomial:
    """Exact monomial coefficients of the Legendre polynomial P_j, P_j(1) = 1."""
    if j < 0:
        raise DomainError("degree must be nonnegative")
    prev, cur = [Fraction(1)], [Fraction(0), Fraction(1)]
    if j == 0:
        return Polynomial(tuple(prev))
    for n in range(1, j):
        nxt = [Fraction(0)] * (n + 2)
        for i, c in enumerate(cur):
            nxt[i + 1] += Fraction(2 * n + 1, n + 1) * c
        for i, c in enumerate(prev):
            nxt[i] -= Fraction(n, n + 1) * c
        prev, cur = cur, nxt
    return Polynomial(tuple(cur))


def legendre_table(N: int) -> list[list[Fraction]]:
    """Coefficient lists of P_0..P_N (ascending), built by the three-term recurrence."""
    rows = [[Fraction(1)], [Fraction(0), Fraction(1)]]
    for n in range(1, N):
        prev, cur = rows[n - 1], rows[n]
        nxt = [Fraction(0)] * (n + 2)
        for i, c in enumerate(cur):
            nxt[i + 1] += Fraction(2 * n + 1, n + 1) * c
        for i, c in enumerate(prev):
            nxt[i] -= Fraction(n, n + 1) * c
        rows.append(nxt)
    return rows[: N + 1]


def legendre_values(N: int, t) -> list:
    """P_0(t)..P_N(t) by the three-term recurrence (exact when t is a Fraction)."""
    vals = [t * 0 + 1, t]
    for n in range(1, N):
        vals.append(((2 * n + 1) * t * vals[n] - n * vals[n - 1]) / (n + 1))
    return vals[: N + 1]


# ---------------------------------------------------------------- reconstruction

def simplest_rational_between(lo: Fraction, hi: Fraction) -> Fraction:
    """The rational of smallest denominator in the closed interval [lo, hi].

    Walks the continued-fraction expansions of both endpoints together.
    """
    if lo > hi:
        lo, hi = hi, lo
    if lo <= 0 <= hi:
        return Fraction(0)
    if hi < 0:
        return -simplest_rational_between(-hi, -lo)
    # convergent recursion h/k over the shared partial quotients
    h0, h1, k0, k1 = 0, 1, 1, 0
    a, b = lo, hi
    while True:
        fl = a.numerator // a.denominator
        if fl == a:  # integer endpoint lies in the interval
            t = fl
            break
        if fl + 1 <= b:
            t = fl + 1
            break
        # both in (fl, fl+1): recurse on reciprocals of the fractional parts
        h0, h1 = h1, fl * h1 + h0
        k0, k1 = k1, fl * k1 + k0
        a, b = 1 / (b - fl), 1 / (a - fl)
    return Fraction(t * h1 + h0, t * k1 + k0)


def _farey_neighbours(p: int, q: int, max_den: int) -> tuple[Fraction, Fraction]:
    """Nearest fractions below and above p/q with denominator <= max_den."""
    if q == 1:
        return Fraction(p * max_den - 1, max_den), Fraction(p * max_den + 1, max_den)
    inv = pow(p % q, -1, q)
    b = inv + q * ((max_den - inv) // q)      # p*b - q*a = 1 -> a/b below
    d = (q - inv) + q * ((max_den - (q - inv)) // q)  # p*d - q*c = -1 -> c/d above
    return Fraction((p * b - 1) // q, b), Fraction((p * d + 1) // q, d)


def rationalize(v: PrecReal, max_denominator: int) -> Fraction | None:
    """The unique p/q with q <= max_denominator inside the certified ball of v.

    Returns None when no such rational exists; raises AmbiguityError when
    the ball holds more than one.
    """
    if v.error is None:
        raise DomainError("rationalize needs a value with a known error bound")
    lo, hi = v.ball()
    cand = simplest_rational_between(lo, hi)
    if cand.denominator > max_denominator:
        return None
    below, above = _farey_neighbours(cand.numerator, cand.denominator, max_denominator)
    if lo <= below or above <= hi:
        raise AmbiguityError(
            f"error ball [{float(lo)!r}, {float(hi)!r}] holds several rationals with "
            f"denominator <= {max_denominator}; need more certified digits")
    return cand


# ---------------------------------------------------------------- fitting

def linear_fit(points, precision: int = 50) -> tuple[mpf, mpf, mpf]:
    """Ordinary least squares y = slope*x + intercept; returns (slope, intercept, r^2)."""
    dps = precision + GUARD_DIGITS
    with mpmath.workdps(dps):
        xs = [_mpf_at(x, dps) for x, _ in points]
        ys = [_mpf_at(y, dps) for _, y in points]
        n = len(xs)
        if n < 2:
            raise DegenerateError("need at least two points")
        mx, my = mpmath.fsum(xs) / n, mpmath.fsum(ys) / n
        sxx = mpmath.fsum((x - mx) ** 2 for x in xs)
        if sxx == 0:
            raise DegenerateError("all x values are equal")
        sxy = mpmath.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
        syy = mpmath.fsum((y - my) ** 2 for y in ys)
        slope = sxy / sxx
        intercept = my - slope * mx
        r2 = mpf(1) if syy == 0 else min(mpf(1), max(mpf(0), sxy * sxy / (sxx * syy)))
    return slope, intercept, r2
