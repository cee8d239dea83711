"""Tangent spaces of the sparse and low-rank varieties, and incoherence measures.

For a sparse matrix the tangent space is every matrix supported inside its
support; for a rank-k matrix with thin SVD ``U S V^T`` it is
``{U X^T + Y V^T}``.  The quantities here (``mu``, ``beta``, ``inc``, the
``xi`` bracket) measure how far those two spaces are from sharing
directions.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .matcore import SupportPattern, as_matrix, spectral_norm, svd

__all__ = [
    "IncoherenceReport",
    "TangentSpace",
    "beta",
    "degrees",
    "has_empty_lines",
    "inc",
    "mu_exact",
    "project_omega",
    "project_omega_complement",
    "project_t",
    "project_t_perp",
    "transversality_sigma",
    "xi_bounds",
    "xi_sampled_lower",
]

ORTHO_TOL = 1e-8
MU_SNAP = 1e-12


def _check_orthonormal(Q, name):
    k = Q.shape[1]
    err = np.abs(Q.T @ Q - np.eye(k)).max() if k else 0.0
    if err > ORTHO_TOL:
        raise ValueError(f"{name} columns are not orthonormal (max |Q^T Q - I| = {err:.2e})")


@dataclass(frozen=True, eq=False)
class TangentSpace:
    """Tangent space at a low-rank matrix, held as its left/right singular frames."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.ascontiguousarray(self.u, dtype=np.float64)
        v = np.ascontiguousarray(self.v, dtype=np.float64)
        if u.ndim != 2 or v.ndim != 2 or u.shape[1] != v.shape[1]:
            raise ValueError("u and v must be 2-D with the same number of columns")
        if u.shape[1] > min(u.shape[0], v.shape[0]):
            raise ValueError("rank exceeds matrix dimensions")
        _check_orthonormal(u, "u")
        _check_orthonormal(v, "v")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @classmethod
    def from_matrix(cls, B, rank_tol=None):
        res = svd(B, rank_tol)
        if res.numerical_rank == 0:
            raise ValueError("tangent space of the zero matrix is undefined")
        return cls(res.u, res.v)

    @property
    def shape(self):
        return (self.u.shape[0], self.v.shape[0])

    @property
    def rank(self):
        return self.u.shape[1]

    @property
    def dimension(self):
        """k(n1 + n2 - k); equals k(2n - k) for square matrices."""
        n1, n2 = self.shape
        return self.rank * (n1 + n2 - self.rank)

    def uv(self):
        return self.u @ self.v.T


def _check_shape(M, shape):
    if M.shape != tuple(shape):
        raise ValueError(f"shape mismatch: matrix {M.shape} vs space {tuple(shape)}")


def project_omega(M, omega: SupportPattern):
    M = as_matrix(M)
    _check_shape(M, omega.shape)
    return np.where(omega.mask(), M, 0.0)


def project_omega_complement(M, omega: SupportPattern):
    M = as_matrix(M)
    _check_shape(M, omega.shape)
    return np.where(omega.mask(), 0.0, M)


def project_t(M, t: TangentSpace):
    M = as_matrix(M)
    _check_shape(M, t.shape)
    return kernels.project_t(M, t.u, t.v)


def project_t_perp(M, t: TangentSpace):
    """(I - P_U) M (I - P_V)."""
    M = as_matrix(M)
    _check_shape(M, t.shape)
    left = M - t.u @ (t.u.T @ M)
    return left - (left @ t.v) @ t.v.T


def _require_nonempty(omega):
    if len(omega) == 0:
        raise ValueError("support is empty; mu and degrees are undefined for the zero matrix")


def mu_exact(omega: SupportPattern):
    """Spectral norm of the 0/1 indicator of the support.

    Entrywise domination (Perron-Frobenius) makes the indicator the maximizer
    of ``||N||`` over matrices supported on ``omega`` with ``||N||_inf <= 1``.
    The value always lies in ``[deg_min, deg_max]`` (the lower end needs no
    empty rows or columns); a floating-point overshoot of at most
    ``MU_SNAP`` relative is snapped back onto that bound, which matters for
    regular supports where mu equals the degree exactly.
    """
    _require_nonempty(omega)
    mu = spectral_norm(omega.indicator())
    lo, hi = degrees(omega)
    if hi < mu <= hi * (1.0 + MU_SNAP):
        mu = float(hi)
    elif not has_empty_lines(omega) and lo * (1.0 - MU_SNAP) <= mu < lo:
        mu = float(lo)
    return mu


def _line_counts(omega):
    rows = np.bincount(omega.indices[:, 0], minlength=omega.rows)
    cols = np.bincount(omega.indices[:, 1], minlength=omega.cols)
    return rows, cols


def degrees(omega: SupportPattern):
    """(deg_min, deg_max) of nonzeros per row/column.

    deg_min only looks at rows and columns that hold at least one entry.
    """
    _require_nonempty(omega)
    rows, cols = _line_counts(omega)
    counts = np.concatenate([rows, cols])
    return int(counts[counts > 0].min()), int(counts.max())


def has_empty_lines(omega: SupportPattern):
    """True if some row or column of the support is empty."""
    rows, cols = _line_counts(omega)
    return bool((rows == 0).any() or (cols == 0).any())


def beta(basis):
    """Largest norm of a projected standard basis vector, i.e. the largest row norm."""
    Q = np.asarray(basis, dtype=np.float64)
    if Q.ndim != 2 or Q.shape[1] == 0:
        raise ValueError("basis must be a nonempty n x k matrix")
    _check_orthonormal(Q, "basis")
    return float(np.sqrt((Q * Q).sum(axis=1)).max())


def inc(t: TangentSpace):
    return max(beta(t.u), beta(t.v))


def xi_bounds(t: TangentSpace):
    lo = inc(t)
    return lo, 2.0 * lo


def _aligned_witness(Q):
    """Unit vector in span(Q) from the most coordinate-aligned direction."""
    norms = np.sqrt((Q * Q).sum(axis=1))
    i = int(np.argmax(norms))
    w = Q @ Q[i]
    return w / norms[i]


def _xi_ratio(N):
    s = spectral_norm(N)
    return float(np.abs(N).max() / s) if s > 0 else 0.0


def xi_sampled_lower(t: TangentSpace, samples=100, seed=0):
    """Lower bound on ``max ||N||_inf / ||N||`` over nonzero ``N`` in the tangent space.

    Two rank-one witnesses built from the most aligned coordinate direction
    of each frame already reach ``inc(t)``; random tangent elements can only
    push the value up.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    n1, n2 = t.shape
    wu = _aligned_witness(t.u)
    wv = _aligned_witness(t.v)
    e1 = np.zeros(n1)
    e1[0] = 1.0
    e2 = np.zeros(n2)
    e2[0] = 1.0
    best = max(_xi_ratio(np.outer(wu, e2)), _xi_ratio(np.outer(e1, wv)))
    rng = np.random.default_rng(seed)
    k = t.rank
    for _ in range(samples):
        X = rng.standard_normal((n2, k))
        Y = rng.standard_normal((n1, k))
        best = max(best, _xi_ratio(t.u @ X.T + Y @ t.v.T))
    return best


def transversality_sigma(omega: SupportPattern, t: TangentSpace, iters=200, tol=1e-10, seed=0):
    """Largest ||P_Omega(N)||_F over unit-Frobenius N in the tangent space.

    The spaces meet only at zero iff the result is below one; callers
    compare against ``1 - 1e-6``.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if omega.shape != t.shape:
        raise ValueError(f"shape mismatch: support {omega.shape} vs space {t.shape}")
    if len(omega) == 0:
        return 0.0
    start = np.random.default_rng(seed).standard_normal(t.shape)
    return float(kernels.transversality_power(omega.indicator(), t.u, t.v, start, iters, tol))


@dataclass
class IncoherenceReport:
    """Rank-sparsity incoherence summary for a (sparse, low-rank) pair.

    Verdicts based on ``xi_upper`` are sufficient conditions only; failing
    them does not mean recovery fails.
    """

    mu: float
    deg_min: int
    deg_max: int
    beta_row: float
    beta_col: float
    inc: float
    xi_lower: float
    xi_upper: float
    xi_sampled_lower: float | None
    uncertainty_product_upper: float
    theorem_condition: bool
    corollary_condition: bool
    gamma_range_thm: tuple | None
    gamma_range_cor: tuple | None
    gamma_recommended: float | None
    degenerate_support: bool
    rank: int
    support_size: int

    def to_dict(self):
        d = asdict(self)
        for key in ("gamma_range_thm", "gamma_range_cor"):
            if d[key] is not None:
                d[key] = [float(x) for x in d[key]]
        for key, val in d.items():
            if isinstance(val, float) and not math.isfinite(val):
                d[key] = None
        return d
