"""Random sparse and low-rank instances, and Monte-Carlo checks of their incoherence.

Every generator is a pure function of its arguments.  Randomness comes from
Philox streams keyed by ``(seed, *stream)``: the same key always gives the
same numbers, and distinct keys (one per trial and purpose) are independent,
so trials can run in any order or in parallel.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import hadamard

from .matcore import svd
from .tangent import beta

__all__ = [
    "EnsembleSpec",
    "LemmaReport",
    "bounded_degree_sparse",
    "check_degree_lemma",
    "check_incoherence_lemma",
    "corollary_regime",
    "incoherent_lowrank",
    "random_lowrank",
    "random_pair",
    "random_sparse",
    "rng_for",
]

# stream purposes
SPARSE = 1
LOWRANK = 2
DEGREE_LEMMA = 3
INCOHERENCE_LEMMA = 4
PHASE = 5
RIGIDITY = 6
BOUNDED = 7
INCOHERENT = 8


def rng_for(seed, *stream):
    """Philox generator for the stream ``(seed, *stream)``."""
    key = tuple(int(s) for s in stream)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=key)))


@dataclass(frozen=True)
class EnsembleSpec:
    """n x n instance with ``m`` sparse entries and rank ``k``; values are standard normal."""

    n: int
    m: int = 1
    k: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if not 0 < self.m <= self.n * self.n:
            raise ValueError(f"m must lie in [1, n^2] = [1, {self.n * self.n}], got {self.m}")
        if not 0 < self.k <= self.n:
            raise ValueError(f"k must lie in [1, n] = [1, {self.n}], got {self.k}")


def random_sparse(spec: EnsembleSpec, *stream):
    """Exactly ``m`` Gaussian entries on a uniformly random support of size ``m``."""
    rng = rng_for(spec.seed, SPARSE, *stream)
    n = spec.n
    flat = rng.choice(n * n, size=spec.m, replace=False)
    A = np.zeros(n * n)
    vals = rng.standard_normal(spec.m)
    # a Gaussian draw of exactly 0.0 would shrink the support
    vals[vals == 0.0] = np.finfo(float).tiny
    A[flat] = vals
    return A.reshape(n, n)


def random_lowrank(spec: EnsembleSpec, *stream):
    """``X @ Y.T`` with ``X, Y`` n x k standard normal."""
    rng = rng_for(spec.seed, LOWRANK, *stream)
    X = rng.standard_normal((spec.n, spec.k))
    Y = rng.standard_normal((spec.n, spec.k))
    return X @ Y.T


def random_pair(spec: EnsembleSpec, *stream):
    return random_sparse(spec, *stream), random_lowrank(spec, *stream)


def bounded_degree_sparse(n, m, seed, *stream):
    """``m <= n`` Gaussian entries with at most one per row and per column."""
    if not 0 < m <= n:
        raise ValueError("need 0 < m <= n for a one-per-line support")
    rng = rng_for(seed, BOUNDED, *stream)
    rows = rng.choice(n, size=m, replace=False)
    cols = rng.choice(n, size=m, replace=False)
    A = np.zeros((n, n))
    vals = rng.standard_normal(m)
    vals[vals == 0.0] = np.finfo(float).tiny
    A[rows, cols] = vals
    return A


def _flat_frame(n, k, rng):
    """n x k orthonormal frame whose entries all have magnitude 1/sqrt(n)."""
    if k == 1:
        return (rng.integers(0, 2, size=(n, 1)) * 2 - 1) / math.sqrt(n)
    if n & (n - 1):
        raise ValueError("rank > 1 needs n to be a power of two (Hadamard frame)")
    H = hadamard(n).astype(float)
    cols = rng.choice(n, size=k, replace=False)
    signs = rng.integers(0, 2, size=n) * 2 - 1
    perm = rng.permutation(n)
    return (signs[:, None] * H[perm][:, cols]) / math.sqrt(n)


def incoherent_lowrank(n, k, seed, *stream):
    """Rank-k matrix whose row and column spaces have incoherence exactly sqrt(k/n).

    Frames come from sign vectors (k = 1) or randomly permuted and sign-flipped
    Hadamard columns; singular values are drawn from ``n * U(0.5, 1.5)`` so the
    entries are O(1) like those of :func:`random_lowrank`.
    """
    if not 0 < k <= n:
        raise ValueError("need 0 < k <= n")
    rng = rng_for(seed, INCOHERENT, *stream)
    U = _flat_frame(n, k, rng)
    V = _flat_frame(n, k, rng)
    s = n * rng.uniform(0.5, 1.5, size=k)
    return (U * s) @ V.T


@dataclass
class LemmaReport:
    trials: int
    satisfied: int
    fraction: float
    bound_formula: str
    constant: float
    bound: float

    def to_dict(self):
        return asdict(self)


def _deg_max(flat, n):
    rows = np.bincount(flat // n, minlength=n)
    cols = np.bincount(flat % n, minlength=n)
    return int(max(rows.max(), cols.max()))


def check_degree_lemma(n, m, trials, seed=0):
    """Fraction of random m-sparse supports with deg_max <= (m / n) ln n."""
    if not n <= m <= n * n:
        raise ValueError("need n <= m <= n^2")
    bound = (m / n) * math.log(n)
    hits = 0
    for trial in range(trials):
        rng = rng_for(seed, DEGREE_LEMMA, trial)
        flat = rng.choice(n * n, size=m, replace=False)
        hits += _deg_max(flat, n) <= bound
    return LemmaReport(trials, hits, hits / trials, "(m/n)*ln(n)", 1.0, bound)


def check_incoherence_lemma(n, k, trials, constant=3.0, seed=0):
    """Fraction of random rank-k matrices with inc <= constant * sqrt(max(k, ln n) / n)."""
    if not 0 < k <= n:
        raise ValueError("need 0 < k <= n")
    bound = constant * math.sqrt(max(k, math.log(n)) / n)
    hits = 0
    for trial in range(trials):
        B = random_lowrank(EnsembleSpec(n, 1, k, seed), INCOHERENCE_LEMMA, trial)
        res = svd(B)
        hits += max(beta(res.u), beta(res.v)) <= bound
    return LemmaReport(trials, hits, hits / trials, "constant*sqrt(max(k, ln(n))/n)",
                       float(constant), bound)


def corollary_regime(n, k):
    """Support-size budget n^1.5 / (ln n * sqrt(max(k, ln n))), constant taken as 1."""
    if n < 2 or k < 1:
        raise ValueError("need n >= 2 and k >= 1")
    ln = math.log(n)
    return n ** 1.5 / (ln * math.sqrt(max(k, ln)))
