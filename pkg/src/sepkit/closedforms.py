"""Closed-form machinery: parameter rules, pFq evaluation at 27/64, the
Pochhammer-ratio factor G1, the stored q-polynomials, telescoping terms for
k = 0 and k = 1, the two-rebit total probability and the k = -1 correction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath
from mpmath import mpf

from .numerics import (GUARD_DIGITS, AffineParam, DomainError, PoleError, Polynomial, PrecReal,
                       as_mpf, gamma_exact, gamma_ratio_exact, is_nonpositive_integer, pochhammer,
                       pochhammer_real, poly_product, to_fraction)

Z = Fraction(27, 64)
R0 = (Z + 1) / 2  # tail-bound engagement ratio

M_COUNTS = {-1: 3, 0: 5, 1: 5, 2: 6, 3: 6, 4: 7, 5: 9, 6: 8, 7: 10, 8: 10, 9: 10}

Q_INITIAL = {
    -1: Fraction(1, 14), 0: Fraction(4, 33), 1: Fraction(45, 286), 2: Fraction(1553, 8398),
    3: Fraction(3073, 14858), 4: Fraction(8348, 37145), 5: Fraction(188373, 785726),
    6: Fraction(1096583, 4342170), 7: Fraction(6050627, 22951470),
    8: Fraction(160298199, 586426690), 9: Fraction(13988600951, 49611697974),
}

_Q_POLYS = {
    -1: [54, 938, 5645, 12625, 9250],
    0: [63000, 410694, 1042015, 1289125, 779750, 185000],
    1: [246960, 1284280, 2724024, 3013197, 1830820, 578300, 74000],
    2: [22004136, 100092606, 192332891, 202090226, 125164535, 45576950, 9002000, 740000],
    3: [134548128, 471120306, 698007782, 566336789, 271168745, 76382750, 11666000, 740000],
    4: [175452420, 522054355, 656629192, 451645197, 182972656, 43492140, 5584000, 296000],
}


# ---------------------------------------------------------------- parameters

def lower_params(k: int) -> list[AffineParam]:
    if k < -1:
        raise DomainError(f"k must be >= -1, got {k}")
    base = Fraction(2 * k, 5)
    offs = [base + Fraction(x, 10) for x in (23, 25, 27, 29, 31)] + [Fraction(k + 3)]
    return [AffineParam(o) for o in offs]


def upper_params(k: int) -> list[AffineParam]:
    """u1, u2 from the sixths rules and u3..u6 from the fifths rules.

    Python's // is the mathematical floor, which matters at k = -1 and 0.
    """
    if k < -1:
        raise DomainError(f"k must be >= -1, got {k}")
    f3, f31 = k // 3, (k + 1) // 3
    u1 = Fraction(4 * f3 + 2 * f31 + 11, 6)
    u2 = Fraction(2 * f3 + 4 * f31 + 13, 6)
    A, B, C, D = (k - 4) // 5, (k - 3) // 5, (k - 2) // 5, (k - 1) // 5
    u3 = Fraction(3 * A + 2 * B + 2 * C + 3 * D + 16, 5)
    u4 = Fraction(3 * A + 2 * B + C + 4 * D + 17, 5)
    u5 = Fraction(2 * A + 3 * B + C + 4 * D + 18, 5)
    u6 = Fraction(2 * A + 3 * B + C + 4 * D + 19, 5)
    return [AffineParam(o) for o in (u1, u2, u3, u4, u5, u6)]


@dataclass(frozen=True)
class ParameterSet:
    k: int
    lower: tuple[AffineParam, ...]
    upper: tuple[AffineParam, ...]
    fixed_upper: Fraction = Fraction(2)

    @classmethod
    def for_k(cls, k: int) -> "ParameterSet":
        return cls(k, tuple(lower_params(k)), tuple(upper_params(k)))

    def u12_sum(self) -> Fraction:
        """u1 + u2 - 2 alpha, an integer by construction."""
        return self.upper[0].offset + self.upper[1].offset


def m_count(k: int) -> int:
    if k not in M_COUNTS:
        raise DomainError(f"m_count is tabulated for -1 <= k <= 9, got {k}")
    return M_COUNTS[k]


# ---------------------------------------------------------------- pFq

@dataclass(frozen=True)
class HypergeometricSpec:
    upper: tuple[Fraction, ...]
    lower: tuple[Fraction, ...]
    argument: Fraction = Z

    def __post_init__(self):
        object.__setattr__(self, "upper", tuple(to_fraction(x) for x in self.upper))
        object.__setattr__(self, "lower", tuple(to_fraction(x) for x in self.lower))
        object.__setattr__(self, "argument", to_fraction(self.argument))

    @property
    def terminates(self) -> bool:
        return any(is_nonpositive_integer(u) for u in self.upper)


@dataclass(frozen=True)
class HypergeometricTemplate:
    """pFq whose parameters are affine in alpha."""

    upper: tuple[AffineParam, ...]
    lower: tuple[AffineParam, ...]
    argument: Fraction = Z

    def at(self, alpha) -> HypergeometricSpec:
        a = to_fraction(alpha)
        return HypergeometricSpec(tuple(p(a) for p in self.upper), tuple(p(a) for p in self.lower), self.argument)

    @property
    def pq(self) -> tuple[int, int]:
        return len(self.upper), len(self.lower)


def _const(c) -> AffineParam:
    return AffineParam(Fraction(c), Fraction(0))


def pfq_family(k: int) -> list[HypergeometricTemplate]:
    """(a) the 7F6 with upper {2, u1..u6}, lower {b1..b6}; (b) the same with every
    parameter lowered by one; (c) for j = 1..m_count(k), (a) with j more upper 2's
    and j more lower 1's."""
    m = m_count(k)
    u, b = upper_params(k), lower_params(k)
    a = HypergeometricTemplate((_const(2), *u), tuple(b))
    minus = HypergeometricTemplate(tuple(p.shifted(-1) for p in a.upper), tuple(p.shifted(-1) for p in a.lower))
    out = [a, minus]
    for j in range(1, m + 1):
        out.append(HypergeometricTemplate(a.upper + (_const(2),) * j, a.lower + (_const(1),) * j))
    return out


def _ratio_bound(upper, lower, j: int, z: mpf) -> mpf | None:
    """sup over j' >= j of |t_{j'+1}/t_{j'}|, or None if not yet bounded.

    Pairs sorted upper with sorted lower parameters (the series' own 1 included);
    a factor (u+j)/(l+j) with positive entries tends monotonically to 1, so it is
    bounded by max(its current value, 1)."""
    ups = sorted(upper)
    los = sorted(list(lower) + [mpf(1)])
    if len(ups) != len(los):
        return None
    bound = abs(z)
    for u, l in zip(ups, los):
        if u + j <= 0 or l + j <= 0:
            return None
        bound *= max((u + j) / (l + j), mpf(1))
    return bound


def pfq_evaluate(spec: HypergeometricSpec, precision: int = 50, max_terms: int = 100000) -> PrecReal:
    """Sum a pFq series with a certified geometric tail bound.

    Once the term ratio is provably below r0 = (27/64 + 1)/2 for all later
    terms, the tail is at most |t_j| r0 / (1 - r0)."""
    dps = precision + GUARD_DIGITS
    z = spec.argument
    if spec.terminates:
        # exact finite sum
        total, term, j = Fraction(0), Fraction(1), 0
        while term != 0:
            total += term
            num = Fraction(1)
            for u in spec.upper:
                num *= u + j
            if num == 0:
                break
            den = Fraction(j + 1)
            for l in spec.lower:
                if l + j == 0:
                    raise PoleError(f"lower parameter {l} vanishes at index {j + 1}")
                den *= l + j
            term = term * num / den * z
            j += 1
        return PrecReal.exact(total, precision)
    if len(spec.upper) > len(spec.lower) + 1 or (len(spec.upper) == len(spec.lower) + 1 and abs(z) >= 1):
        raise DomainError("series does not converge at this argument")
    for l in spec.lower:
        if is_nonpositive_integer(l):
            raise PoleError(f"lower parameter {l} is a nonpositive integer")
    with mpmath.workdps(dps):
        ups = [as_mpf(u, dps) for u in spec.upper]
        los = [as_mpf(l, dps) for l in spec.lower]
        zz = as_mpf(z, dps)
        r0 = as_mpf(R0, dps)
        total, term = mpf(0), mpf(1)
        target = mpf(10) ** (-precision)
        for j in range(max_terms):
            total += term
            ratio = zz
            for u in ups:
                ratio *= u + j
            for l in los:
                ratio /= l + j
            ratio /= j + 1
            nxt = term * ratio
            rb = _ratio_bound(ups, los, j + 1, zz)
            if rb is not None and rb < r0:
                tail = abs(nxt) / (1 - rb)
                if tail <= target * abs(total) or tail == 0:
                    rounding = abs(total) * mpf(10) ** (-(dps - 2)) * (j + 2)
                    return PrecReal(total, precision, tail + rounding)
            term = nxt
    raise DomainError(f"pFq did not reach {precision} digits in {max_terms} terms")


@dataclass(frozen=True)
class WeightedHypergeometricSum:
    terms: tuple[tuple[Polynomial, HypergeometricTemplate], ...]

    @classmethod
    def from_json(cls, text: str, k: int) -> "WeightedHypergeometricSum":
        """Weights as a JSON list of {"coefficients": [...], "extra_upper_twos": j}.

        ``coefficients`` are ascending-degree rationals ("p/q" strings or ints);
        ``extra_upper_twos`` j >= 1 selects the (7+j)F(6+j) member of the family,
        0 the distinguished 7F6 and -1 its minus-one companion.
        """
        fam = pfq_family(k)
        out = []
        for item in json.loads(text):
            poly = Polynomial(tuple(to_fraction(c) for c in item["coefficients"]))
            j = int(item.get("extra_upper_twos", 0))
            idx = {0: 0, -1: 1}.get(j, j + 1)
            if not 0 <= idx < len(fam):
                raise DomainError(f"no family member with {j} extra upper 2's at k={k}")
            out.append((poly, fam[idx]))
        return cls(tuple(out))


def g2_weighted_sum(ws: WeightedHypergeometricSum, alpha, precision: int = 50) -> PrecReal:
    a = to_fraction(alpha)
    total = PrecReal.exact(0, precision)
    for weight, template in ws.terms:
        total = total + pfq_evaluate(template.at(a), precision) * weight(a)
    return total


# ---------------------------------------------------------------- G1

def _g1_upper_start(k: int) -> list[Fraction]:
    """Starting values s_i with G1 = (27/64)^(alpha-1) prod (s_i)_(alpha-1) / prod (b_i(1))_(alpha-1).

    Each upper parameter enters shifted down by one, u_i(0); for k = 0 the
    third one is unshifted, which puts (6+5 alpha) rather than (1+5 alpha)
    into the p2 coefficient of the difference equation for G2.
    """
    starts = [u(Fraction(0)) for u in upper_params(k)]
    if k == 0:
        starts[2] += 1
    return starts


def g1_ratio(k: int, alpha) -> Fraction:
    """G1(alpha+1)/G1(alpha) under the default convention."""
    a = to_fraction(alpha)
    num = Z
    for s in _g1_upper_start(k):
        num *= s + a - 1
    for b in lower_params(k):
        num /= b(a)
    return num


def g1(k: int, alpha, convention: str = "shifted", precision: int = 50):
    """Pochhammer-ratio factor G1^k(alpha); G1(1) = 1.

    ``shifted`` (default): (27/64)^(a-1) prod (u_i(0))_(a-1) / prod (b_i(1))_(a-1),
    so consecutive ratios are (27/64) prod (u_i(a)-1) / prod b_i(a) (with the
    k = 0 adjustment in ``_g1_upper_start``).
    ``literal``: (27/64)^(a-1) prod (u_i(a))_(a-1) / prod (b_i(a))_(a-1), the
    parameters taken at the same alpha as the Pochhammer order.
    Exact Fraction for integer alpha, PrecReal otherwise.
    """
    a = to_fraction(alpha)
    if k < -1 or a <= 0:
        raise DomainError("need k >= -1 and alpha > 0")
    if convention == "shifted":
        ups, los = _g1_upper_start(k), [b(Fraction(1)) for b in lower_params(k)]
    elif convention == "literal":
        ups, los = [u(a) for u in upper_params(k)], [b(a) for b in lower_params(k)]
    else:
        raise DomainError(f"unknown G1 convention {convention!r}")
    if a.denominator == 1:
        n = a.numerator - 1
        out = Z**n
        for u in ups:
            out *= pochhammer(u, n)
        for b in los:
            out /= pochhammer(b, n)
        return out
    out = PrecReal.exact(1, precision)
    with mpmath.workdps(precision + GUARD_DIGITS):
        zpow = mpmath.power(as_mpf(Z, precision + GUARD_DIGITS), as_mpf(a - 1, precision + GUARD_DIGITS))
        out = out * PrecReal(zpow, precision, abs(zpow) * mpf(10) ** (-precision - GUARD_DIGITS + 2))
    for u in ups:
        out = out * pochhammer_real(u, a - 1, precision + 5)
    for b in los:
        out = out / pochhammer_real(b, a - 1, precision + 5)
    return out


# ---------------------------------------------------------------- q polynomials

def q_polynomial(k: int) -> tuple[Polynomial, Polynomial | None]:
    """Irreducible p0 cofactor for k = -1..4; k = 4 also returns the factor 9 + 4 alpha."""
    if k not in _Q_POLYS:
        raise DomainError(f"q-polynomials are stored for -1 <= k <= 4, got {k}")
    extra = Polynomial.linear(4, 9) if k == 4 else None
    return Polynomial(tuple(Fraction(c) for c in _Q_POLYS[k])), extra


def q_full(k: int) -> Polynomial:
    q, extra = q_polynomial(k)
    return q * extra if extra is not None else q


# ---------------------------------------------------------------- telescoping terms

def _concise_term_exact_k0(a: Fraction) -> Fraction:
    q0 = q_full(0)(a)
    g = gamma_ratio_exact([3 * a + Fraction(5, 2), 5 * a + 2],
                          [a + 1, 2 * a + 3, 5 * a + Fraction(13, 2)])
    e = -4 * a - 6  # integer for integer and half-integer alpha
    return q0 * Fraction(2) ** int(e) * g / 6


_K1_SHIFTS = (Fraction(7, 10), Fraction(9, 10), Fraction(11, 10), Fraction(13, 10))


def _concise_term_exact_k1(n: int) -> Fraction:
    """k = 1 term at integer alpha = n.

    Gamma(n+5/6)Gamma(n+7/6) = (5/6)_n (7/6)_n pi/3 and
    Gamma(n+17/10)...Gamma(n+23/10) = prod (c)_(n+1) * 3 pi^2/25, so the pi's cancel."""
    a = Fraction(n)
    q1 = q_full(1)(a)
    qpre = Fraction(9, 10**6) * (5 * a + 1) * (5 * a + 2) * (5 * a + 3) * q1
    num = qpre * Fraction(27) ** n * gamma_ratio_exact([5 * a], [a, 2 * a + 5])
    num *= pochhammer(Fraction(5, 6), n) * pochhammer(Fraction(7, 6), n) / 3
    den = Fraction(50000) ** n * Fraction(3, 25)
    for c in _K1_SHIFTS:
        den *= pochhammer(c, n + 1)
    return num / den


def _concise_term_real(k: int, a, dps: int) -> mpf:
    with mpmath.workdps(dps):
        x = as_mpf(a, dps)
        G = mpmath.gamma
        if k == 0:
            q = as_mpf(q_full(0)(to_fraction(a)), dps) if not isinstance(a, mpf) else _poly_mpf(q_full(0), x)
            return q * mpmath.power(2, -4 * x - 6) * G(3 * x + mpf(5) / 2) * G(5 * x + 2) / (
                6 * G(x + 1) * G(2 * x + 3) * G(5 * x + mpf(13) / 2))
        q = 9 * mpmath.pi / mpf(10) ** 6 * (5 * x + 1) * (5 * x + 2) * (5 * x + 3) * _poly_mpf(q_full(1), x)
        den = mpmath.power(50000, x) * G(x) * G(2 * x + 5)
        for c in (mpf(17) / 10, mpf(19) / 10, mpf(21) / 10, mpf(23) / 10):
            den *= G(x + c)
        return q * mpmath.power(27, x) * G(5 * x) * G(x + mpf(5) / 6) * G(x + mpf(7) / 6) / den


def _poly_mpf(p: Polynomial, x: mpf) -> mpf:
    acc = mpf(0)
    for c in reversed(p.coeffs):
        acc = acc * x + mpf(c.numerator) / c.denominator
    return acc


def concise_term(k: int, alpha, precision: int = 50):
    """f(alpha) = Q(k, alpha) - Q(k, alpha + 1) for k in {0, 1}.

    Exact Fraction at integer alpha (and half-integer alpha for k = 0),
    PrecReal elsewhere."""
    if k not in (0, 1):
        raise DomainError("concise telescoping terms exist for k = 0 and k = 1")
    a = to_fraction(alpha)
    if a <= 0:
        raise DomainError("alpha must be positive")
    if k == 0 and a.denominator in (1, 2):
        return _concise_term_exact_k0(a)
    if k == 1 and a.denominator == 1:
        return _concise_term_exact_k1(a.numerator)
    dps = precision + GUARD_DIGITS
    v = _concise_term_real(k, a, dps)
    return PrecReal(v, precision, abs(v) * mpf(10) ** (-precision))


def _term_ratio_real(k: int, x: mpf) -> mpf:
    """f(x+1)/f(x) as a rational function of x (Gamma ratios reduced)."""
    if k == 0:
        q = q_full(0)
        r = _poly_mpf(q, x + 1) / _poly_mpf(q, x) / 16
        r *= (3 * x + mpf(5) / 2) * (3 * x + mpf(7) / 2) * (3 * x + mpf(9) / 2)
        for i in range(5):
            r *= (5 * x + 2 + i) / (5 * x + mpf(13) / 2 + i)
        r /= (x + 1) * (2 * x + 3) * (2 * x + 4)
        return r
    q = q_full(1)
    r = _poly_mpf(q, x + 1) / _poly_mpf(q, x) * 27 / 50000
    r *= (5 * x + 6) * (5 * x + 7) * (5 * x + 8) / ((5 * x + 1) * (5 * x + 2) * (5 * x + 3))
    for i in range(5):
        r *= 5 * x + i
    r *= (x + mpf(5) / 6) * (x + mpf(7) / 6) / x
    for c in (mpf(17) / 10, mpf(19) / 10, mpf(21) / 10, mpf(23) / 10):
        r /= x + c
    r /= (2 * x + 5) * (2 * x + 6)
    return r


def concise_Q(k: int, alpha, precision: int = 50, max_terms: int = 20000) -> PrecReal:
    """Q(k, alpha) = sum_{i >= 0} f(alpha + i) with a geometric tail bound.

    The bound engages once the term ratio has stayed below r0 = (27/64+1)/2
    for three consecutive terms (the ratio tends to 27/64)."""
    if k not in (0, 1):
        raise DomainError("concise formulas exist for k = 0 and k = 1")
    a = to_fraction(alpha)
    dps = precision + GUARD_DIGITS + 10
    with mpmath.workdps(dps):
        first = concise_term(k, a, dps)
        term = as_mpf(first, dps) if not isinstance(first, PrecReal) else first.value
        x = as_mpf(a, dps)
        total = mpf(0)
        below = 0
        r0 = as_mpf(R0, dps)
        for i in range(max_terms):
            total += term
            ratio = _term_ratio_real(k, x + i)
            below = below + 1 if ratio < r0 else 0
            term = term * ratio
            if below >= 3:
                tail = abs(term) / (1 - r0)
                if tail <= abs(total) * mpf(10) ** (-precision - 2):
                    err = tail + abs(total) * mpf(10) ** (-(dps - 5)) * (i + 1)
                    return PrecReal(total, precision, err)
    raise DomainError(f"tail bound not reached within {max_terms} terms")


def concise_Q_exact(k: int, alpha: int) -> Fraction:
    """Backward route Q(k, n) = Q(k, 1) - sum_{i=1}^{n-1} f(i) at integer n >= 1."""
    if k not in (0, 1):
        raise DomainError("concise formulas exist for k = 0 and k = 1")
    n = int(alpha)
    if n != alpha or n < 1:
        raise DomainError("exact backward route needs integer alpha >= 1")
    q = Q_INITIAL[k]
    for i in range(1, n):
        q -= concise_term(k, i)
    return q


def concise_Q_sequence(k: int, n_max: int) -> list[Fraction]:
    """Q(k, 1..n_max) by the exact backward route."""
    out, q = [], Q_INITIAL[k]
    for i in range(1, n_max + 1):
        out.append(q)
        q -= concise_term(k, i)
    return out


# ---------------------------------------------------------------- rebit and correction

def rebit_total_prob(k: int) -> Fraction:
    """1 - 4^(k+1)(8k+15) Gamma(k+2) Gamma(2k+9/2) / (sqrt(pi) Gamma(3k+7))."""
    if k < 0:
        raise DomainError("k must be a nonnegative integer")
    r1, e1 = gamma_exact(Fraction(2 * k) + Fraction(9, 2))
    assert e1 == 1
    sub = Fraction(4) ** (k + 1) * (8 * k + 15) * gamma_ratio_exact([k + 2], [3 * k + 7]) * r1
    return 1 - sub


def kminus1_correction(alpha, precision: int = 50) -> PrecReal:
    """Homogeneous-solution term added to the zero-seeded k = -1 recurrence."""
    dps = precision + GUARD_DIGITS
    with mpmath.workdps(dps):
        x = as_mpf(alpha, dps)
        for bad in (x, 5 * x, x + mpf(1) / 6, x + mpf(5) / 6):
            if bad <= 0 and mpmath.isint(bad):
                raise PoleError(f"gamma pole at alpha = {alpha}")
        v = mpmath.pi * mpmath.power(3, -3 * x - 5) * mpmath.power(4, 3 * x + 2) * mpmath.power(5, 5 * x + 3)
        for c in (mpf(9) / 10, mpf(11) / 10, mpf(13) / 10, mpf(3) / 2, mpf(17) / 10):
            v *= mpmath.rf(c, x + 1)
        v *= mpmath.gamma(x) * mpmath.gamma(x + 2)
        v /= 52055003 * mpmath.gamma(5 * x) * mpmath.gamma(x + mpf(1) / 6) * mpmath.gamma(x + mpf(5) / 6)
    return PrecReal(v, precision, abs(v) * mpf(10) ** (-precision))
