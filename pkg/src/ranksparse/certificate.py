"""Dual certificates for exact recovery and the admissible ranges of gamma.

A pair (A*, B*) is the unique solution of the convex program when the
support space of A* and the tangent space of B* meet only at zero and a
dual matrix Q exists with

    P_T(Q) = U V^T,   P_Omega(Q) = gamma * sign(A*),
    ||P_T_perp(Q)|| < 1,   ||P_Omega_c(Q)||_inf < gamma.

:func:`build_certificate` constructs the unique such Q inside
Omega (+) T by a fixed-point iteration and checks the two inequalities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .matcore import as_matrix, spectral_norm, support_of, svd
from .tangent import (
    IncoherenceReport,
    TangentSpace,
    beta,
    degrees,
    has_empty_lines,
    mu_exact,
    project_t_perp,
    transversality_sigma,
    xi_sampled_lower,
)

__all__ = [
    "CertificateResult",
    "GammaRange",
    "build_certificate",
    "certified_gamma_interval",
    "condition_report",
    "gamma_range_corollary",
    "gamma_range_theorem",
]

PASS_MARGIN = 1e-6
EQUALITY_TOL = 1e-8
TRANSVERSAL_THRESHOLD = 1.0 - 1e-6


@dataclass(frozen=True)
class GammaRange:
    """Open interval of admissible gamma with a recommended interior point."""

    lower: float
    upper: float
    recommended: float
    valid: bool

    def contains(self, gamma):
        return self.valid and self.lower < gamma < self.upper

    def to_dict(self):
        def clean(x):
            return float(x) if math.isfinite(x) else None

        return {
            "lower": clean(self.lower),
            "upper": clean(self.upper),
            "recommended": clean(self.recommended),
            "valid": self.valid,
        }


def gamma_range_theorem(mu, xi):
    """(xi / (1 - 4 mu xi), (1 - 3 mu xi) / mu), nonempty when mu * xi < 1/6."""
    if not (mu > 0 and xi > 0):
        raise ValueError("mu and xi must be positive")
    p = mu * xi
    lower = xi / (1.0 - 4.0 * p) if p < 0.25 else math.inf
    upper = (1.0 - 3.0 * p) / mu
    recommended = math.sqrt(3.0 * xi / (2.0 * mu))
    return GammaRange(lower, upper, recommended, p < 1.0 / 6.0)


def gamma_range_corollary(deg_max, inc):
    """(2 inc / (1 - 8 d inc), (1 - 6 d inc) / d), nonempty when d * inc < 1/12."""
    if not (deg_max > 0 and inc > 0):
        raise ValueError("deg_max and inc must be positive")
    p = deg_max * inc
    lower = 2.0 * inc / (1.0 - 8.0 * p) if p < 0.125 else math.inf
    upper = (1.0 - 6.0 * p) / deg_max
    recommended = math.sqrt(3.0 * inc / deg_max)
    return GammaRange(lower, upper, recommended, p < 1.0 / 12.0)


@dataclass
class CertificateResult:
    gamma: float
    q_hat: np.ndarray = field(repr=False)
    eps_omega_inf: float
    eps_t_spec: float
    cond_pt_equals_uv: float
    cond_pomega_equals_sign: float
    cond_tperp_norm: float
    cond_omegac_inf: float
    transversality_sigma: float
    fixed_point_iters: int
    fixed_point_converged: bool
    verdict: str
    uv_residual_inf: float = 0.0
    sign_residual_inf: float = 0.0

    def to_dict(self, include_q=False):
        d = {
            "gamma": self.gamma,
            "eps_omega_inf": self.eps_omega_inf,
            "eps_t_spec": self.eps_t_spec,
            "cond_pt_equals_uv": self.cond_pt_equals_uv,
            "cond_pomega_equals_sign": self.cond_pomega_equals_sign,
            "cond_tperp_norm": self.cond_tperp_norm,
            "cond_omegac_inf": self.cond_omegac_inf,
            "transversality_sigma": self.transversality_sigma,
            "fixed_point_iters": self.fixed_point_iters,
            "verdict": self.verdict,
        }
        if include_q:
            d["q_hat"] = self.q_hat.tolist()
        return d


def _setup(a, b, zero_tol, rank_tol):
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape != b.shape:
        raise ValueError("a and b must have the same shape")
    omega = support_of(a, zero_tol)
    if len(omega) == 0:
        raise ValueError("sparse component is zero; its sign pattern is empty")
    low = svd(b, rank_tol)
    if low.numerical_rank == 0:
        raise ValueError("low-rank component has rank zero")
    t = TangentSpace(low.u, low.v)
    mask = omega.indicator()
    sign = np.sign(a) * mask
    return omega, t, mask, sign


def _fixed_point(sparse_target, lowrank_target, mask, t, tol, max_iters):
    eps_o, eps_t, iters, ok = kernels.certificate_fixed_point(
        np.ascontiguousarray(sparse_target), np.ascontiguousarray(lowrank_target),
        mask, t.u, t.v, float(tol), int(max_iters),
    )
    return eps_o, eps_t, int(iters), bool(ok)


def build_certificate(a, b, gamma, fp_tol=1e-12, fp_max_iters=20000, zero_tol=0.0,
                      rank_tol=None, sigma_iters=200):
    """Construct the dual candidate for ``(a, b)`` at ``gamma`` and grade it.

    ``verdict`` is ``"pass"`` when every condition holds with relative margin
    1e-6, ``"fail"`` when one is violated (or the spaces are not
    transversal) and ``"inconclusive"`` when the fixed point did not
    converge within ``fp_max_iters``.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    omega, t, mask, sign = _setup(a, b, zero_tol, rank_tol)
    uv = t.uv()
    eps_o, eps_t, iters, converged = _fixed_point(gamma * sign, uv, mask, t, fp_tol, fp_max_iters)
    q = gamma * sign + eps_o + uv + eps_t

    pt_res = kernels.project_t(q, t.u, t.v) - uv
    po_res = mask * q - gamma * sign
    tperp = spectral_norm(project_t_perp(q, t))
    off = float(np.abs(q * (1.0 - mask)).max())
    sigma = transversality_sigma(omega, t, iters=sigma_iters)

    eq_pt = float(np.linalg.norm(pt_res))
    eq_po = float(np.linalg.norm(po_res))
    if not np.isfinite(q).all():
        tperp = off = math.inf
    if sigma >= TRANSVERSAL_THRESHOLD:
        verdict = "fail"
    elif not converged:
        verdict = "inconclusive"
    elif (
        tperp < 1.0 - PASS_MARGIN
        and off < gamma * (1.0 - PASS_MARGIN)
        and eq_pt <= EQUALITY_TOL
        and eq_po <= EQUALITY_TOL
    ):
        verdict = "pass"
    else:
        verdict = "fail"

    return CertificateResult(
        gamma=float(gamma),
        q_hat=q,
        eps_omega_inf=float(np.abs(eps_o).max()),
        eps_t_spec=spectral_norm(eps_t) if np.isfinite(eps_t).all() else math.inf,
        cond_pt_equals_uv=eq_pt,
        cond_pomega_equals_sign=eq_po,
        cond_tperp_norm=float(tperp),
        cond_omegac_inf=off,
        transversality_sigma=sigma,
        fixed_point_iters=iters,
        fixed_point_converged=converged,
        verdict=verdict,
        uv_residual_inf=float(np.abs(pt_res).max()),
        sign_residual_inf=float(np.abs(po_res).max()),
    )


_EMPTY = GammaRange(math.nan, math.nan, math.nan, False)


def _linear_bounds(p, q, margin):
    """Interval of gamma > 0 with |p + gamma q| < gamma (1 - margin) for every entry."""
    lo, hi = 0.0, math.inf
    s = 1.0 - margin
    # gamma (s - q) > p  and  gamma (s + q) > -p
    for c, d in ((s - q, p), (s + q, -p)):
        pos = c > 0
        neg = c < 0
        zero = ~(pos | neg)
        if np.any(d[zero] >= 0):
            return None
        if pos.any():
            lo = max(lo, float((d[pos] / c[pos]).max()))
        if neg.any():
            hi = min(hi, float((d[neg] / c[neg]).min()))
    return (lo, hi) if lo < hi else None


def _golden_min(f, lo, hi, iters=80):
    g = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - g * (hi - lo)
    x2 = lo + g * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - g * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + g * (hi - lo)
            f2 = f(x2)
    return (x1, f1) if f1 < f2 else (x2, f2)


def _bisect(f, inside, outside, iters=80):
    for _ in range(iters):
        mid = 0.5 * (inside + outside)
        if f(mid):
            inside = mid
        else:
            outside = mid
    return inside


def certified_gamma_interval(a, b, fp_tol=1e-12, fp_max_iters=20000, zero_tol=0.0,
                             rank_tol=None):
    """All gamma for which :func:`build_certificate` would pass, as one interval.

    The dual candidate is affine in gamma, ``Q(gamma) = Q0 + gamma * Q1``, so
    the entrywise condition cuts out an interval exactly and the spectral
    condition (convex in gamma) is resolved by golden-section search and
    bisection.  ``recommended`` is the geometric mean of the end points.
    """
    omega, t, mask, sign = _setup(a, b, zero_tol, rank_tol)
    if transversality_sigma(omega, t) >= TRANSVERSAL_THRESHOLD:
        return _EMPTY
    uv = t.uv()
    zero = np.zeros_like(uv)
    e0o, e0t, _, ok0 = _fixed_point(zero, uv, mask, t, fp_tol, fp_max_iters)
    e1o, e1t, _, ok1 = _fixed_point(sign, zero, mask, t, fp_tol, fp_max_iters)
    if not (ok0 and ok1):
        return _EMPTY
    q0 = e0o + uv + e0t
    q1 = sign + e1o + e1t

    off = mask == 0
    bounds = _linear_bounds(q0[off], q1[off], PASS_MARGIN) if off.any() else (0.0, math.inf)
    if bounds is None:
        return _EMPTY
    lo, hi = bounds

    x0 = project_t_perp(q0, t)
    x1 = project_t_perp(q1, t)
    limit = 1.0 - PASS_MARGIN

    def perp(g):
        return spectral_norm(x0 + g * x1)

    if not math.isfinite(hi):
        slope = spectral_norm(x1)
        hi = lo + (2.0 + spectral_norm(x0)) / slope if slope > 0 else max(2.0 * lo, 1.0)
    g_best, f_best = _golden_min(perp, lo, hi)
    if f_best >= limit:
        return _EMPTY
    ok = lambda g: perp(g) < limit  # noqa: E731
    left = lo if ok(lo) else _bisect(ok, g_best, lo)
    right = hi if ok(hi) else _bisect(ok, g_best, hi)
    if not left < right:
        return _EMPTY
    rec = math.sqrt(left * right) if left > 0 else 0.5 * right
    return GammaRange(left, right, rec, True)


def condition_report(a, b, xi_samples=0, seed=0, zero_tol=0.0, rank_tol=None):
    """Incoherence diagnostics for a sparse ``a`` and low-rank ``b``.

    The theorem check uses the exact ``mu`` and the upper bound ``2 * inc``
    for ``xi``, so both verdicts are conservative.
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    omega = support_of(a, zero_tol)
    if len(omega) == 0:
        raise ValueError("sparse component is zero")
    low = svd(b, rank_tol)
    if low.numerical_rank == 0:
        raise ValueError("low-rank component is zero")
    t = TangentSpace(low.u, low.v)

    mu = mu_exact(omega)
    deg_min, deg_max = degrees(omega)
    beta_col = beta(t.u)
    beta_row = beta(t.v)
    inc_val = max(beta_row, beta_col)
    xi_lo, xi_hi = inc_val, 2.0 * inc_val
    sampled = xi_sampled_lower(t, xi_samples, seed) if xi_samples > 0 else None

    thm = gamma_range_theorem(mu, xi_hi)
    cor = gamma_range_corollary(deg_max, inc_val)
    recommended = thm.recommended if thm.valid else (cor.recommended if cor.valid else None)
    return IncoherenceReport(
        mu=mu,
        deg_min=deg_min,
        deg_max=deg_max,
        beta_row=beta_row,
        beta_col=beta_col,
        inc=inc_val,
        xi_lower=xi_lo,
        xi_upper=xi_hi,
        xi_sampled_lower=sampled,
        uncertainty_product_upper=xi_hi * mu,
        theorem_condition=mu * xi_hi < 1.0 / 6.0,
        corollary_condition=deg_max * inc_val < 1.0 / 12.0,
        gamma_range_thm=(thm.lower, thm.upper) if thm.valid else None,
        gamma_range_cor=(cor.lower, cor.upper) if cor.valid else None,
        gamma_recommended=recommended,
        degenerate_support=has_empty_lines(omega),
        rank=t.rank,
        support_size=len(omega),
    )
