"""Monte Carlo oracle: induced-measure random two-qubit (or two-rebit)
density matrices from Ginibre matrices, partial transposes and determinants.

Samples are drawn in fixed-size chunks, each from its own substream spawned
off one SeedSequence, so results do not depend on how chunks are scheduled.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import mpmath
import numpy as np

from .numerics import DomainError

CHUNK = 50_000
FIELDS = ("real", "complex")
MAX_MOMENT = 4
# statistics accumulated per chunk, in this order
STAT_NAMES = ("d_positive", "pt_positive", "det_pt", "det_rho") + tuple(f"d^{n}" for n in range(1, MAX_MOMENT + 1))


def _check_field(field: str) -> None:
    if field not in FIELDS:
        raise DomainError(f"field must be one of {FIELDS}, got {field!r}")


def columns(k: int, field: str) -> int:
    """Ginibre width giving eigenvalue weight |rho|^k times the flat measure.

    A 4xK Wishart matrix has density prod(lambda)^(alpha(K-3)-1), so
    K = 3 + (k+1)/alpha: 4+k complex columns, 5+2k real ones."""
    _check_field(field)
    return 4 + k if field == "complex" else 5 + 2 * k


def ginibre(k: int, field: str, size: int, rng: np.random.Generator) -> np.ndarray:
    """(size, 4, columns(k, field)) matrices with iid standard Gaussian entries."""
    _check_field(field)
    if columns(k, field) < 1:
        raise DomainError("k too small for a non-empty Ginibre matrix")
    shape = (size, 4, columns(k, field))
    g = rng.standard_normal(shape)
    if field == "complex":
        g = g + 1j * rng.standard_normal(shape)
    return g


def density_batch(k: int, field: str, size: int, rng: np.random.Generator) -> np.ndarray:
    g = ginibre(k, field, size, rng)
    w = g @ np.conj(np.swapaxes(g, -1, -2))
    tr = np.real(np.trace(w, axis1=-2, axis2=-1))
    # a zero trace has probability zero; regenerate just in case
    bad = ~(tr > np.finfo(float).tiny)
    if np.any(bad):
        w[bad] = density_batch(k, field, int(bad.sum()), rng) * 1.0
        tr[bad] = 1.0
    return w / tr[:, None, None]


def sample_density(k: int, field: str, rng: np.random.Generator) -> np.ndarray:
    """One 4x4 density matrix GG*/tr(GG*)."""
    return density_batch(k, field, 1, rng)[0]


def check_density(rho: np.ndarray, tol: float = 1e-12) -> None:
    """Raise DomainError unless rho is Hermitian, trace one and PSD within tol."""
    rho = np.asarray(rho)
    if rho.shape[-2:] != (4, 4):
        raise DomainError("expected 4x4 matrices")
    if not np.allclose(rho, np.conj(np.swapaxes(rho, -1, -2)), atol=tol, rtol=0):
        raise DomainError("matrix is not Hermitian")
    tr = np.real(np.trace(rho, axis1=-2, axis2=-1))
    if np.any(np.abs(tr - 1) > tol):
        raise DomainError("trace differs from one")
    if np.any(np.linalg.eigvalsh(rho) < -tol):
        raise DomainError("matrix has a negative eigenvalue")


def partial_transpose(rho: np.ndarray) -> np.ndarray:
    """Transpose on the second subsystem: swaps (i j, k l) -> (i l, k j).

    Works on a single 4x4 matrix or a stack of them."""
    rho = np.asarray(rho)
    lead = rho.shape[:-2]
    r = rho.reshape(lead + (2, 2, 2, 2))
    n = len(lead)
    axes = tuple(range(n)) + (n, n + 3, n + 2, n + 1)
    return r.transpose(axes).reshape(lead + (4, 4))


def determinant4(m):
    """Determinant of a 4x4 matrix (or stack).

    numpy arrays use LU in floating point, Hermitian inputs give a real
    result.  Nested lists of Fractions or ints are expanded exactly."""
    if isinstance(m, np.ndarray):
        d = np.linalg.det(m)
        return np.real(d) if np.iscomplexobj(d) else d
    return _det_exact([list(row) for row in m])


def _det_exact(a: list[list]):
    n = len(a)
    if n == 1:
        return a[0][0]
    total = 0
    for j in range(n):
        if a[0][j] == 0:
            continue
        minor = [row[:j] + row[j + 1:] for row in a[1:]]
        total += (-1) ** j * a[0][j] * _det_exact(minor)
    return total


# ---------------------------------------------------------------- estimation

@dataclass(frozen=True)
class McEstimate:
    k: int
    field: str
    n_samples: int
    seed: int
    p_d_positive: float
    p_d_positive_se: float
    p_pt_positive: float
    p_pt_positive_se: float
    mean_det_pt: float
    mean_det_pt_se: float
    mean_det_rho: float
    mean_det_rho_se: float
    d_moments: tuple[float, ...]
    d_moments_se: tuple[float, ...]
    d_min: float
    d_max: float
    implication_violations: int

    def to_json(self) -> dict:
        return asdict(self)

    def within(self, name: str, target: float, sigmas: float) -> bool:
        v, se = getattr(self, name), getattr(self, name + "_se")
        return abs(v - target) <= sigmas * se


def _chunk_stats(k: int, field: str, size: int, seed_seq: np.random.SeedSequence) -> dict:
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    rho = density_batch(k, field, size, rng)
    det_rho = determinant4(rho)
    det_pt = determinant4(partial_transpose(rho))
    d = det_pt - det_rho
    cols = [(d > 0).astype(float), (det_pt > 0).astype(float), det_pt, det_rho]
    cols += [d**n for n in range(1, MAX_MOMENT + 1)]
    return {"n": size,
            "sum": [math.fsum(c) for c in cols],
            "sumsq": [math.fsum(c * c) for c in cols],
            "min": float(d.min()), "max": float(d.max()),
            "violations": int(np.count_nonzero((d > 0) & ~(det_pt > 0)))}


def _chunk_sizes(n: int) -> list[int]:
    full, rest = divmod(n, CHUNK)
    return [CHUNK] * full + ([rest] if rest else [])


def mc_estimate(k: int, field: str, n_samples: int, seed: int = 0, workers: int = 1) -> McEstimate:
    """Estimate P(D > 0), P(|rho^PT| > 0) and moments of D by sampling.

    Deterministic in (k, field, n_samples, seed) for any ``workers``."""
    _check_field(field)
    if n_samples < 1000:
        raise DomainError("n_samples must be at least 1000")
    if k == -1:
        warnings.warn("k = -1 sampling (rank-3 states) is experimental", UserWarning)
    sizes = _chunk_sizes(n_samples)
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    args = [(k, field, s, q) for s, q in zip(sizes, seqs)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_chunk_stats, *zip(*args)))
    else:
        parts = [_chunk_stats(*a) for a in args]

    n = n_samples
    m = len(STAT_NAMES)
    mean = [math.fsum(p["sum"][i] for p in parts) / n for i in range(m)]
    sq = [math.fsum(p["sumsq"][i] for p in parts) / n for i in range(m)]
    # sample standard deviation / sqrt(n)
    se = [math.sqrt(max(sq[i] - mean[i] ** 2, 0.0) * n / (n - 1) / n) for i in range(m)]
    return McEstimate(
        k=k, field=field, n_samples=n, seed=seed,
        p_d_positive=mean[0], p_d_positive_se=se[0],
        p_pt_positive=mean[1], p_pt_positive_se=se[1],
        mean_det_pt=mean[2], mean_det_pt_se=se[2],
        mean_det_rho=mean[3], mean_det_rho_se=se[3],
        d_moments=tuple(mean[4:]), d_moments_se=tuple(se[4:]),
        d_min=min(p["min"] for p in parts), d_max=max(p["max"] for p in parts),
        implication_violations=sum(p["violations"] for p in parts))


def precision_check(k: int, field: str, n_samples: int = 10_000, seed: int = 0, dps: int = 40) -> dict:
    """Recompute the D > 0 indicator for a subset in extended precision.

    The sampled double matrices are taken as exact and their determinants
    re-evaluated with mpmath; returns both counts and the number of samples
    whose indicator changed."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    rho = density_batch(k, field, n_samples, rng)
    pt = partial_transpose(rho)
    fast = (determinant4(pt) - determinant4(rho)) > 0
    slow = np.zeros(n_samples, dtype=bool)
    with mpmath.workdps(dps):
        for i in range(n_samples):
            a = mpmath.matrix(rho[i].tolist())
            b = mpmath.matrix(pt[i].tolist())
            slow[i] = mpmath.re(mpmath.det(b) - mpmath.det(a)) > 0
    return {"n_samples": n_samples, "double_count": int(fast.sum()), "extended_count": int(slow.sum()),
            "flipped": int(np.count_nonzero(fast != slow))}
