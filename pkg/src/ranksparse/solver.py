"""ADMM solver for min gamma*||A||_1 + ||B||_* subject to A + B = C."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .kernels.numpy_impl import CONVERGED, NON_FINITE
from .matcore import SvdError, as_matrix, l1_norm, nuclear_norm, support_of, svd

__all__ = [
    "DecompositionResult",
    "OptimalityReport",
    "SolverConfig",
    "SolverError",
    "check_optimality",
    "decompose",
    "decompose_t",
    "gamma_to_t",
    "soft_threshold",
    "sv_threshold",
    "t_to_gamma",
]

log = logging.getLogger(__name__)


class SolverError(ArithmeticError):
    """The iteration produced non-finite values."""


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of the alternating-direction solver.

    ``rho_init=None`` picks ``0.25 * n1 * n2 / ||C||_1``.  With
    ``adaptive_rho`` the penalty is doubled or halved every ten iterations
    when the primal and dual residuals are more than 10x apart.
    """

    gamma: float
    rho_init: float | None = None
    tol_primal: float = 1e-7
    tol_change: float = 1e-9
    max_iters: int = 50000
    adaptive_rho: bool = True

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ValueError(f"gamma must be positive and finite, got {self.gamma}")
        if self.rho_init is not None and not self.rho_init > 0:
            raise ValueError("rho_init must be positive")
        if not (self.tol_primal > 0 and self.tol_change > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class DecompositionResult:
    a_hat: np.ndarray = field(repr=False)
    b_hat: np.ndarray = field(repr=False)
    iterations: int
    primal_residual: float
    objective: float
    converged: bool
    gamma_used: float
    t_used: float | None = None
    rho_final: float | None = None
    multiplier: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self, include_matrices=False):
        d = {
            "iterations": self.iterations,
            "primal_residual": self.primal_residual,
            "objective": self.objective,
            "converged": self.converged,
            "gamma_used": self.gamma_used,
            "t_used": self.t_used,
            "rho_final": self.rho_final,
            "shape": list(self.a_hat.shape),
        }
        if include_matrices:
            d["a_hat"] = self.a_hat.tolist()
            d["b_hat"] = self.b_hat.tolist()
        return d


def soft_threshold(M, tau):
    """Entrywise shrinkage sign(x) * max(|x| - tau, 0); ties at |x| = tau go to 0."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    return kernels.soft_threshold(as_matrix(M), float(tau))


def sv_threshold(M, tau):
    """Shrink the singular values of ``M`` by ``tau``, dropping those that reach 0."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    M = as_matrix(M)
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdError(f"SVD did not converge: {exc}") from exc
    s = np.maximum(s - tau, 0.0)
    k = int(np.count_nonzero(s))
    return (U[:, :k] * s[:k]) @ Vt[:k]


def t_to_gamma(t):
    if not 0.0 < t < 1.0:
        raise ValueError(f"t must lie in (0, 1), got {t}")
    return t / (1.0 - t)


def gamma_to_t(gamma):
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return gamma / (1.0 + gamma)


def decompose(C, config: SolverConfig, warm_start: DecompositionResult | None = None):
    """Split ``C`` into sparse + low-rank parts.

    ``warm_start`` reuses the iterates, multiplier and penalty of an earlier
    result on the same ``C``; a parameter sweep converges much faster that
    way.  Hitting ``max_iters`` is reported through ``converged=False``.
    """
    C = as_matrix(C, "C")
    gamma = float(config.gamma)
    zeros = np.zeros_like(C)
    c_l1 = float(np.abs(C).sum())
    if c_l1 == 0.0:
        return DecompositionResult(zeros, zeros.copy(), 0, 0.0, 0.0, True, gamma,
                                   rho_final=config.rho_init, multiplier=zeros.copy())
    rho = config.rho_init or 0.25 * C.size / c_l1
    A0, B0, L0 = zeros, zeros, zeros
    if warm_start is not None:
        if warm_start.a_hat.shape != C.shape:
            raise ValueError("warm start has the wrong shape")
        A0, B0 = warm_start.a_hat, warm_start.b_hat
        if warm_start.multiplier is not None:
            L0 = warm_start.multiplier
        if warm_start.rho_final:
            rho = warm_start.rho_final
    try:
        A, B, L, iters, primal, rho, status = kernels.admm_loop(
            C, gamma, float(rho), float(config.tol_primal), float(config.tol_change),
            int(config.max_iters), bool(config.adaptive_rho),
            np.ascontiguousarray(A0), np.ascontiguousarray(B0), np.ascontiguousarray(L0),
        )
    except np.linalg.LinAlgError as exc:
        raise SvdError(f"SVD did not converge inside the solver: {exc}") from exc
    if status == NON_FINITE:
        raise SolverError(f"non-finite iterate at iteration {iters}")
    converged = status == CONVERGED
    if not converged:
        log.debug("decompose: max_iters=%d reached, primal residual %.3e", iters, primal)
    objective = gamma * l1_norm(A) + nuclear_norm(B)
    return DecompositionResult(A, B, int(iters), float(primal), objective, converged, gamma,
                               rho_final=float(rho), multiplier=L)


def decompose_t(C, t, config: SolverConfig | None = None, warm_start=None):
    """Solve min t*||A||_1 + (1-t)*||B||_* s.t. A + B = C via gamma = t / (1 - t)."""
    gamma = t_to_gamma(t)
    config = SolverConfig(gamma) if config is None else replace(config, gamma=gamma)
    res = decompose(C, config, warm_start)
    res.t_used = float(t)
    return res


@dataclass
class OptimalityReport:
    """Violations of the subgradient optimality conditions for a candidate pair.

    ``sign_residual`` and ``uv_residual`` are max-entry errors of the two
    projection equalities; ``offsupport_excess`` and ``perp_excess`` are how
    far the two inequality conditions are exceeded (0 when satisfied).
    """

    sign_residual: float
    uv_residual: float
    offsupport_excess: float
    perp_excess: float
    sparse_degenerate: bool
    lowrank_degenerate: bool
    dual_converged: bool

    @property
    def max_residual(self):
        return max(self.sign_residual, self.uv_residual, self.offsupport_excess, self.perp_excess)

    def passed(self, tol=1e-6):
        return self.max_residual <= tol

    def to_dict(self):
        return {
            "sign_residual": self.sign_residual,
            "uv_residual": self.uv_residual,
            "offsupport_excess": self.offsupport_excess,
            "perp_excess": self.perp_excess,
            "sparse_degenerate": self.sparse_degenerate,
            "lowrank_degenerate": self.lowrank_degenerate,
            "dual_converged": self.dual_converged,
            "max_residual": self.max_residual,
        }


def check_optimality(a, b, gamma, zero_tol=0.0):
    """A-posteriori check that ``(a, b)`` solves the program for ``gamma``.

    The dual candidate is the certificate matrix built on the support of
    ``a`` and the tangent space of ``b``.  A zero ``a`` or ``b`` drops the
    conditions that refer to it.
    """
    from .certificate import build_certificate

    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape != b.shape:
        raise ValueError("a and b must have the same shape")
    omega = support_of(a, zero_tol)
    sparse_zero = len(omega) == 0
    low = svd(b)
    lowrank_zero = low.numerical_rank == 0

    if sparse_zero and lowrank_zero:
        return OptimalityReport(0.0, 0.0, 0.0, 0.0, True, True, True)
    if sparse_zero:
        uv = low.u @ low.v.T
        excess = max(0.0, float(np.abs(uv).max()) - gamma)
        return OptimalityReport(0.0, 0.0, excess, 0.0, True, False, True)
    if lowrank_zero:
        q = gamma * np.sign(np.where(omega.mask(), a, 0.0))
        excess = max(0.0, float(np.linalg.norm(q, 2)) - 1.0)
        return OptimalityReport(0.0, 0.0, 0.0, excess, False, True, True)

    cert = build_certificate(a, b, gamma, zero_tol=zero_tol)
    return OptimalityReport(
        sign_residual=cert.sign_residual_inf,
        uv_residual=cert.uv_residual_inf,
        offsupport_excess=max(0.0, cert.cond_omegac_inf - gamma),
        perp_excess=max(0.0, cert.cond_tperp_norm - 1.0),
        sparse_degenerate=False,
        lowrank_degenerate=False,
        dual_converged=cert.fixed_point_converged,
    )
