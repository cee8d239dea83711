"""Pure-numpy reference kernels.

These are the fallback path and the ground truth the numba kernels are
tested against.  Every function takes and returns C-contiguous float64
arrays; validation happens in the public modules, not here.
"""

import numpy as np

# admm_loop status codes
CONVERGED = 0
MAX_ITERS = 1
NON_FINITE = 2


def soft_threshold(M, tau):
    return np.sign(M) * np.maximum(np.abs(M) - tau, 0.0)


def project_t(M, U, V):
    """P_U M + M P_V - P_U M P_V using the factors, never forming n x n projectors."""
    X = U.T @ M
    Y = M @ V
    return U @ X + (Y - U @ (X @ V)) @ V.T


def sv_threshold(M, tau):
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    return (U * s) @ Vt


def admm_loop(C, gamma, rho, tol_primal, tol_change, max_iters, adaptive, A, B, L):
    """Alternating-direction iteration for min gamma*|A|_1 + |B|_* s.t. A + B = C.

    ``A``, ``B`` and the multiplier ``L`` are the starting point and are not
    modified.  Returns ``(A, B, L, iterations, primal_residual, rho, status)``.
    """
    A = A.copy()
    B = B.copy()
    L = L.copy()
    scale = max(1.0, np.linalg.norm(C))
    primal = np.linalg.norm(C - A - B) / scale
    for it in range(1, max_iters + 1):
        A_new = soft_threshold(C - B + L / rho, gamma / rho)
        B_new = sv_threshold(C - A_new + L / rho, 1.0 / rho)
        R = C - A_new - B_new
        L += rho * R
        r_norm = np.linalg.norm(R)
        dB = np.linalg.norm(B_new - B)
        change = (np.linalg.norm(A_new - A) + dB) / scale
        primal = r_norm / scale
        A = A_new
        B = B_new
        if not (np.isfinite(primal) and np.isfinite(change)):
            return A, B, L, it, primal, rho, NON_FINITE
        if primal <= tol_primal and change <= tol_change:
            return A, B, L, it, primal, rho, CONVERGED
        if adaptive and it % 10 == 0:
            s_norm = rho * dB
            if r_norm > 10.0 * s_norm:
                rho *= 2.0
            elif s_norm > 10.0 * r_norm:
                rho /= 2.0
    return A, B, L, max_iters, primal, rho, MAX_ITERS


def certificate_fixed_point(sparse_target, lowrank_target, mask, U, V, tol, max_iters):
    """Solve eps_O = -P_O(lowrank_target + eps_T), eps_T = -P_T(sparse_target + eps_O).

    ``mask`` is the 0/1 indicator of the support.  The map is a contraction
    with factor sigma^2 whenever the support space and the tangent space
    meet transversally.  Returns ``(eps_omega, eps_t, iterations, converged)``.
    """
    eps_t = np.zeros_like(sparse_target)
    eps_o = np.zeros_like(sparse_target)
    for it in range(1, max_iters + 1):
        eps_o_new = -mask * (lowrank_target + eps_t)
        eps_t_new = -project_t(sparse_target + eps_o_new, U, V)
        delta = np.linalg.norm(eps_t_new - eps_t) + np.linalg.norm(eps_o_new - eps_o)
        eps_o = eps_o_new
        eps_t = eps_t_new
        if not np.isfinite(delta):
            return eps_o, eps_t, it, False
        if delta < tol:
            return eps_o, eps_t, it, True
    return eps_o, eps_t, max_iters, False


def transversality_power(mask, U, V, start, iters, tol):
    """Largest singular value of N -> P_O(N) restricted to the tangent space.

    Power iteration on the self-adjoint map N -> P_T(P_O(P_T(N))); its top
    eigenvalue is sigma^2.  ``start`` is any nonzero matrix.
    """
    x = project_t(start, U, V)
    nx = np.linalg.norm(x)
    if nx == 0.0:
        return 0.0
    x /= nx
    lam = 0.0
    for _ in range(iters):
        y = project_t(mask * x, U, V)
        lam_new = np.sum(x * y)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
        if abs(lam_new - lam) <= tol * max(lam_new, 1e-300):
            lam = lam_new
            break
        lam = lam_new
    return np.sqrt(min(max(lam, 0.0), 1.0))
