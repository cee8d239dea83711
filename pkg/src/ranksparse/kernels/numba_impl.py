"""numba-compiled kernels mirroring :mod:`numpy_impl` one for one."""

import numpy as np
from numba import njit

from .numpy_impl import CONVERGED, MAX_ITERS, NON_FINITE


@njit(cache=True)
def soft_threshold(M, tau):
    out = np.empty_like(M)
    n1, n2 = M.shape
    for i in range(n1):
        for j in range(n2):
            x = M[i, j]
            if x > tau:
                out[i, j] = x - tau
            elif x < -tau:
                out[i, j] = x + tau
            else:
                out[i, j] = 0.0
    return out


@njit(cache=True)
def project_t(M, U, V):
    X = U.T @ M
    Y = M @ V
    return U @ X + (Y - U @ (X @ V)) @ V.T


@njit(cache=True)
def _sv_threshold(M, tau):
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    k = 0
    for i in range(s.shape[0]):
        s[i] = s[i] - tau
        if s[i] > 0.0:
            k += 1
        else:
            s[i] = 0.0
    # singular values are sorted, so the surviving ones are a prefix
    out = np.zeros_like(M)
    if k > 0:
        out = (U[:, :k] * s[:k]) @ np.ascontiguousarray(Vt[:k, :])
    return out


@njit(cache=True)
def _fro(M):
    acc = 0.0
    for x in M.flat:
        acc += x * x
    return np.sqrt(acc)


@njit(cache=True)
def admm_loop(C, gamma, rho, tol_primal, tol_change, max_iters, adaptive, A, B, L):
    A = A.copy()
    B = B.copy()
    L = L.copy()
    n1, n2 = C.shape
    scale = max(1.0, _fro(C))
    primal = _fro(C - A - B) / scale
    for it in range(1, max_iters + 1):
        A_new = soft_threshold(C - B + L / rho, gamma / rho)
        B_new = _sv_threshold(C - A_new + L / rho, 1.0 / rho)
        r2 = 0.0
        da2 = 0.0
        db2 = 0.0
        for i in range(n1):
            for j in range(n2):
                r = C[i, j] - A_new[i, j] - B_new[i, j]
                L[i, j] += rho * r
                r2 += r * r
                d = A_new[i, j] - A[i, j]
                da2 += d * d
                d = B_new[i, j] - B[i, j]
                db2 += d * d
        r_norm = np.sqrt(r2)
        dB = np.sqrt(db2)
        change = (np.sqrt(da2) + dB) / scale
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


@njit(cache=True)
def certificate_fixed_point(sparse_target, lowrank_target, mask, U, V, tol, max_iters):
    eps_t = np.zeros_like(sparse_target)
    eps_o = np.zeros_like(sparse_target)
    for it in range(1, max_iters + 1):
        eps_o_new = -mask * (lowrank_target + eps_t)
        eps_t_new = -project_t(sparse_target + eps_o_new, U, V)
        delta = _fro(eps_t_new - eps_t) + _fro(eps_o_new - eps_o)
        eps_o = eps_o_new
        eps_t = eps_t_new
        if not np.isfinite(delta):
            return eps_o, eps_t, it, False
        if delta < tol:
            return eps_o, eps_t, it, True
    return eps_o, eps_t, max_iters, False


@njit(cache=True)
def transversality_power(mask, U, V, start, iters, tol):
    x = project_t(start, U, V)
    nx = _fro(x)
    if nx == 0.0:
        return 0.0
    x = x / nx
    lam = 0.0
    for _ in range(iters):
        y = project_t(mask * x, U, V)
        lam_new = np.sum(x * y)
        ny = _fro(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
        if abs(lam_new - lam) <= tol * max(lam_new, 1e-300):
            lam = lam_new
            break
        lam = lam_new
    return np.sqrt(min(max(lam, 0.0), 1.0))
