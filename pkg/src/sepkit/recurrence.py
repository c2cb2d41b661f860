"""First-order difference equations p0 + p1 s(a) + p2 s(a+1) = 0 with
polynomial coefficients: iteration, guessing from exact data, ansatz fitting,
and the exact route to Q(k, alpha) at integer alpha for -1 <= k <= 4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import flint
import mpmath
from mpmath import mpf

from . import closedforms as cf
from .numerics import (AmbiguityError, DomainError, Polynomial, PrecReal, poly_gcd, poly_product,
                       rationalize, to_fraction)


class InconsistentError(ValueError):
    """Supplied points do not satisfy the requested structure."""


@dataclass(frozen=True)
class DifferenceEquation:
    k: int | None
    p0: Polynomial
    p1: Polynomial
    p2: Polynomial
    seed: tuple[Fraction, Fraction] | None = None

    def normalized(self) -> "DifferenceEquation":
        """Integer coefficients, no common polynomial factor, content 1,
        leading coefficient of p2 positive."""
        g = poly_gcd(poly_gcd(self.p0, self.p1), self.p2)
        ps = [self.p0, self.p1, self.p2]
        if not g.is_zero() and g.degree > 0:
            ps = [p.divmod(g)[0] for p in ps]
        dens = [c.denominator for p in ps for c in p.coeffs]
        nums = [c.numerator for p in ps for c in p.coeffs]
        scale = Fraction(math.lcm(*dens), math.gcd(*nums)) if nums else Fraction(1)
        lead = ps[2].coeffs[-1] if not ps[2].is_zero() else next(c for p in ps for c in reversed(p.coeffs))
        if lead < 0:
            scale = -scale
        ps = [p * scale for p in ps]
        return DifferenceEquation(self.k, *ps, seed=self.seed)

    def residual(self, alpha, s0, s1) -> Fraction:
        a = to_fraction(alpha)
        return self.p0(a) + self.p1(a) * s0 + self.p2(a) * s1

    def same_up_to_scale(self, other: "DifferenceEquation") -> bool:
        a, b = self.normalized(), other.normalized()
        return (a.p0, a.p1, a.p2) == (b.p0, b.p1, b.p2)

    def to_json(self) -> dict:
        return {"k": self.k,
                "p0": [str(c) for c in self.p0.coeffs], "p1": [str(c) for c in self.p1.coeffs],
                "p2": [str(c) for c in self.p2.coeffs],
                "seed": None if self.seed is None else [str(self.seed[0]), str(self.seed[1])]}

    @classmethod
    def from_json(cls, d: dict) -> "DifferenceEquation":
        poly = lambda xs: Polynomial(tuple(Fraction(x) for x in xs))
        seed = d.get("seed")
        return cls(d.get("k"), poly(d["p0"]), poly(d["p1"]), poly(d["p2"]),
                   None if seed is None else (Fraction(seed[0]), Fraction(seed[1])))

    def with_seed(self, alpha0, value) -> "DifferenceEquation":
        return DifferenceEquation(self.k, self.p0, self.p1, self.p2, (to_fraction(alpha0), to_fraction(value)))


def iterate(eq: DifferenceEquation, steps: int) -> list[Fraction]:
    """s(a0 + j) for j = 0..steps via s(a+1) = -(p0(a) + p1(a) s(a)) / p2(a)."""
    if eq.seed is None:
        raise DomainError("equation has no seed")
    a, s = eq.seed
    out = [s]
    for _ in range(steps):
        d = eq.p2(a)
        if d == 0:
            raise ZeroDivisionError(f"p2 vanishes at alpha = {a}")
        s = -(eq.p0(a) + eq.p1(a) * s) / d
        a += 1
        out.append(s)
    return out


# ---------------------------------------------------------------- guessing

def _row(alpha: Fraction, s0: Fraction, s1: Fraction, d: int) -> list[int]:
    scale = math.lcm(alpha.denominator ** d, s0.denominator * s1.denominator)
    pw = [alpha**i for i in range(d + 1)]
    row = [scale * p for p in pw] + [scale * p * s0 for p in pw] + [scale * p * s1 for p in pw]
    return [int(x) for x in row]


def _nullspace(rows: list[list[int]]) -> list[list[int]]:
    X, nullity = flint.fmpz_mat(rows).nullspace()
    n = X.nrows()
    return [[int(X[i, j]) for i in range(n)] for j in range(nullity)]


def _equation_from_vector(v: Sequence[int], d: int, k=None) -> DifferenceEquation:
    p = [Polynomial(tuple(Fraction(x) for x in v[i * (d + 1):(i + 1) * (d + 1)])) for i in range(3)]
    return DifferenceEquation(k, *p).normalized()


def _resolve_ambiguity(basis, fit, d: int, k) -> DifferenceEquation:
    """Pick one equation from a nullspace of dimension > 1.

    This happens when the data is a rational function (a relation with
    p2 = 0 exists) or when every basis vector is a polynomial multiple of the
    same equation.  The homogeneous solution (p0 = 0) is preferred when it is
    unique; otherwise all reduced basis vectors must coincide.
    """
    n = d + 1
    hom = _nullspace([_row(a, s0, s1, d)[n:] for a, s0, s1 in fit])
    if len(hom) == 1:
        return _equation_from_vector([0] * n + hom[0], d, k)
    eqs = [_equation_from_vector(v, d, k) for v in basis]
    if all(e.same_up_to_scale(eqs[0]) for e in eqs[1:]):
        return eqs[0]
    raise AmbiguityError(f"nullspace of dimension {len(basis)} at degree {d}")


def guess_first_order(values: Sequence[tuple], max_degree: int, holdout: int = 5,
                      k: int | None = None) -> DifferenceEquation | None:
    """Find the minimal-degree first-order equation satisfied by exact data.

    ``values`` are consecutive (alpha, s(alpha)) pairs.  For each degree d the
    exact integer nullspace is computed on all but the last ``holdout`` steps;
    the candidate is accepted only if it also satisfies the held out steps.
    Larger nullspaces go through ``_resolve_ambiguity``.  Returns None when no
    degree up to ``max_degree`` works.
    """
    pts = [(to_fraction(a), to_fraction(s)) for a, s in values]
    if len(pts) < 3 * (max_degree + 1) + holdout:
        raise DomainError(f"need at least {3 * (max_degree + 1) + holdout} values for degree {max_degree}")
    for i in range(len(pts) - 1):
        if pts[i + 1][0] - pts[i][0] != 1:
            raise DomainError("values must be at consecutive alpha")
    steps = [(pts[i][0], pts[i][1], pts[i + 1][1]) for i in range(len(pts) - 1)]
    fit, test = steps[: len(steps) - holdout], steps[len(steps) - holdout:]
    for d in range(max_degree + 1):
        n_unknown = 3 * (d + 1)
        rows = [_row(a, s0, s1, d) for a, s0, s1 in fit[: n_unknown + holdout]]
        basis = _nullspace(rows)
        if not basis:
            continue
        if len(basis) > 1:
            # more rows may cut it down
            basis = _nullspace([_row(a, s0, s1, d) for a, s0, s1 in fit])
            if not basis:
                continue
        if len(basis) > 1:
            eq = _resolve_ambiguity(basis, fit, d, k)
        else:
            eq = _equation_from_vector(basis[0], d, k)
        if all(eq.residual(a, s0, s1) == 0 for a, s0, s1 in fit + test):
            return eq.with_seed(*pts[0])
    return None


# ---------------------------------------------------------------- ansatz

def ansatz_polynomials(k: int) -> tuple[Polynomial, Polynomial, Polynomial]:
    """Structural factors (P0, P1, P2) with p_i = c_i P_i.

    P1 = prod b_i, P0 = q_k prod b_i (b_i - 1) (q_4 includes 9 + 4 alpha),
    P2 = prod (u_i - 1) except for k = 0, where the factor 1 + 5 alpha of that
    product is replaced by 6 + 5 alpha.
    """
    b = [p.as_polynomial() for p in cf.lower_params(k)]
    P1 = poly_product(b)
    P0 = cf.q_full(k) * P1 * poly_product(p - Polynomial.const(1) for p in b)
    P2 = poly_product(Polynomial.linear(1, s - 1) for s in cf._g1_upper_start(k))
    return P0, P1, P2


EXCEPTIONS = {0: "p2: (1+5α) of prod(u_i-1) replaced by (6+5α)", 4: "p0: extra factor (9+4α)"}


@dataclass(frozen=True)
class AnsatzFit:
    k: int
    c0: Fraction
    c1: Fraction
    c2: Fraction
    equation: DifferenceEquation
    exception_flags: tuple[str, ...] = field(default=())


def fit_ansatz(k: int, g2_values: Sequence[tuple], holdout: Sequence[tuple]) -> AnsatzFit:
    """Solve c0 P0 + c1 P1 s(a) + c2 P2 s(a+1) = 0 for (c0 : c1 : c2).

    ``g2_values`` are >= 3 exact (alpha, G2) points at consecutive alpha
    (two constraints), ``holdout`` >= 2 further consecutive points checked
    exactly.  Raises InconsistentError if the ansatz fails any check.
    """
    pts = sorted((to_fraction(a), to_fraction(s)) for a, s in list(g2_values) + list(holdout))
    if len(g2_values) < 3 or len(holdout) < 2:
        raise DomainError("need >= 3 fitting points and >= 2 holdout points")
    P0, P1, P2 = ansatz_polynomials(k)
    steps = [(pts[i][0], pts[i][1], pts[i + 1][1]) for i in range(len(pts) - 1)
             if pts[i + 1][0] - pts[i][0] == 1]
    n_fit = len(g2_values) - 1
    fit_steps, test_steps = steps[:n_fit], steps[n_fit:]
    if len(fit_steps) < 2:
        raise DomainError("fitting points must include two consecutive-alpha steps")
    rows = [[P0(a), P1(a) * s0, P2(a) * s1] for a, s0, s1 in fit_steps]
    # cross product of the first two rows spans the solution
    r1, r2 = rows[0], rows[1]
    c = [r1[1] * r2[2] - r1[2] * r2[1], r1[2] * r2[0] - r1[0] * r2[2], r1[0] * r2[1] - r1[1] * r2[0]]
    if all(x == 0 for x in c):
        raise InconsistentError("fitting constraints are degenerate")
    for a, s0, s1 in fit_steps[2:] + test_steps:
        if c[0] * P0(a) + c[1] * P1(a) * s0 + c[2] * P2(a) * s1 != 0:
            raise InconsistentError(f"ansatz fails at alpha = {a} for k = {k}")
    if not test_steps:
        raise DomainError("holdout points must extend the fitting points consecutively")
    eq = DifferenceEquation(k, P0 * c[0], P1 * c[1], P2 * c[2]).normalized().with_seed(*pts[0])
    scale = c[1]
    flags = (EXCEPTIONS[k],) if k in EXCEPTIONS else ()
    return AnsatzFit(k, c[0] / scale, Fraction(1), c[2] / scale, eq, flags)


# ---------------------------------------------------------------- exact Q route

def _tele_factor(k: int) -> Polynomial:
    q = cf.q_full(k)
    return q * Polynomial.linear(1, Fraction(1, 5)) if k == 0 else q


def _tele_ratio(k: int, a: Fraction) -> Fraction:
    """t(a+1)/t(a) for t(a) = (27/64)^a qt(a) prod Gamma(u_i(a)-1)/Gamma(b_i(a)-1)."""
    qt = _tele_factor(k)
    r = cf.Z * qt(a + 1) / qt(a)
    for u in cf.upper_params(k):
        r *= u(a) - 1
    for b in cf.lower_params(k):
        r /= b(a) - 1
    return r


def _tele_first(k: int) -> Fraction:
    a = Fraction(1)
    t = _tele_factor(k)(a)
    for b in cf.lower_params(k):
        t *= b(a) - 1
    for u in cf.upper_params(k):
        t /= u(a) - 1
    return t


@lru_cache(maxsize=None)
def decay_constant(k: int, digits: int = 50, max_denominator: int = 10**25) -> Fraction:
    """C_k with Q(k, a) - Q(k, a+1) = C_k t(a), fixed by Q(k, a) -> 0.

    Q(k, 1) = C_k sum_{j>=1} t(j); the sum is evaluated with a certified
    tail and C_k is recovered by rational reconstruction."""
    if k not in range(-1, 5):
        raise DomainError("exact route covers -1 <= k <= 4")
    dps = digits + 30
    with mpmath.workdps(dps):
        t = _tele_first(k)
        total, term = mpf(0), mpf(t.numerator) / t.denominator
        r0 = mpf(cf.R0.numerator) / cf.R0.denominator
        below = 0
        for j in range(1, 100000):
            total += term
            r = _tele_ratio(k, Fraction(j))
            below = below + 1 if r < cf.R0 else 0
            term *= mpf(r.numerator) / r.denominator
            if below >= 3 and abs(term) / (1 - r0) < abs(total) * mpf(10) ** (-digits - 5):
                break
        err = abs(term) / (1 - r0) + abs(total) * mpf(10) ** (-(dps - 10))
        q1 = cf.Q_INITIAL[k]
        S = PrecReal(total, digits, err)
        C = PrecReal.exact(q1, digits) / S
    found = rationalize(C, max_denominator)
    if found is None:
        raise InconsistentError(f"decay constant for k={k} has no small rational form")
    return found


def q_exact(k: int, alpha: int) -> Fraction:
    """Q(k, n) = Q(k, 1) - C_k sum_{j<n} t(j) at integer n >= 1."""
    n = int(alpha)
    if n != alpha or n < 1:
        raise DomainError("integer alpha >= 1 required")
    if k in (0, 1):
        return cf.concise_Q_exact(k, n)
    C = decay_constant(k)
    q, t = cf.Q_INITIAL[k], _tele_first(k)
    for j in range(1, n):
        q -= C * t
        t *= _tele_ratio(k, Fraction(j))
    return q


def q_exact_sequence(k: int, n_max: int) -> list[Fraction]:
    if k in (0, 1):
        return cf.concise_Q_sequence(k, n_max)
    C = decay_constant(k)
    out, q, t = [], cf.Q_INITIAL[k], _tele_first(k)
    for j in range(1, n_max + 1):
        out.append(q)
        q -= C * t
        t *= _tele_ratio(k, Fraction(j))
    return out


def g2_points(k: int, alphas: Sequence[int]) -> list[tuple[Fraction, Fraction]]:
    """Exact (alpha, G2) pairs: concise formulas for k = 0, 1, the decay-calibrated
    telescoping route otherwise."""
    qs = q_exact_sequence(k, max(alphas))
    return [(Fraction(a), qs[a - 1] / cf.g1(k, a)) for a in alphas]


@lru_cache(maxsize=None)
def fitted_equation(k: int) -> DifferenceEquation:
    """Ansatz fit from G2 at alpha = 1, 2, 3 with holdout alpha = 4, 5,
    seeded at (1, Q(k, 1))."""
    pts = g2_points(k, [1, 2, 3, 4, 5])
    fit = fit_ansatz(k, pts[:3], pts[3:])
    return fit.equation.with_seed(1, cf.Q_INITIAL[k])


def q_from_recurrence(k: int, alpha: int) -> Fraction:
    n = int(alpha)
    if n != alpha or n < 1:
        raise DomainError("integer alpha >= 1 required")
    if k not in range(-1, 5):
        raise DomainError("fitted equations exist for -1 <= k <= 4")
    s = iterate(fitted_equation(k), n - 1)[-1]
    return cf.g1(k, n) * s


def q_sequence_from_recurrence(k: int, n_max: int) -> list[Fraction]:
    eq = fitted_equation(k)
    return [cf.g1(k, i + 1) * s for i, s in enumerate(iterate(eq, n_max - 1))]
