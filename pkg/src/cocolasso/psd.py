"""Nearest positive semi-definite projection in elementwise max-norm.

The projection (K)+ = argmin_{K1 >= eps*I} ||K - K1||_max is computed with an
ADMM splitting: an eigenvalue-clamp step keeps the iterate in the PSD cone,
an l1-ball projection step handles the max-norm term on the lower-triangular
vectorization, and a scaled dual update ties the two together.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg


@dataclass
class AdmmConfig:
    """Knobs for the max-norm nearest-PSD ADMM."""

    mu: float = 10.0
    eps_floor: float = 0.0
    tol_primal: float = 1e-7
    tol_dual: float = 1e-7
    max_iter: int = 20000
    # over-relaxation factor; 1.0 reproduces the plain splitting
    relaxation: float = 1.0
    # retried in order when the first run stalls; empty tuple disables restarts
    mu_restarts: tuple[float, ...] = (1.0, 100.0)

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if not 0.5 <= self.relaxation < 2.0:
            raise ValueError("relaxation must lie in [0.5, 2)")
        if self.eps_floor < 0:
            raise ValueError("eps_floor must be >= 0")
        if self.tol_primal <= 0 or self.tol_dual <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class PsdResult:
    sigma_tilde: np.ndarray
    iterations: int
    primal_residual: float
    dual_residual: float
    max_norm_distance: float
    converged: bool
    mu_used: float = field(default=float("nan"))


def l1_ball_project(x, radius):
    """Euclidean projection of ``x`` onto the l1 ball of the given radius.

    Sort-based algorithm of Duchi et al. (2008): when ``x`` is outside the
    ball the projection is a soft-threshold sign(x_i) * max(|x_i| - theta, 0)
    with theta chosen so the result has l1 norm exactly ``radius``.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("input vector must be finite")
    a = np.abs(x)
    if a.sum() <= radius:
        return x.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u) - radius
    k = np.arange(1, u.size + 1)
    rho = np.nonzero(u > css / k)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.sign(x) * np.maximum(a - theta, 0.0)


def eigen_clamp(M, eps=0.0):
    """Clamp the eigenvalues of a symmetric matrix below at ``eps``."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(M, M.T, atol=1e-8, rtol=0.0):
        raise ValueError("matrix must be symmetric")
    w, V = scipy.linalg.eigh(M)
    if w[0] >= eps:
        return M.copy()
    w = np.maximum(w, eps)
    out = (V * w) @ V.T
    return 0.5 * (out + out.T)


def _vec_l_indices(p):
    return np.tril_indices(p)


def _admm(sigma_hat, mu, eps, tol_primal, tol_dual, max_iter, alpha):
    p = sigma_hat.shape[0]
    rows, cols = _vec_l_indices(p)
    norm_ref = 1.0 + np.linalg.norm(sigma_hat, "fro")

    A = np.zeros_like(sigma_hat)
    B = np.zeros_like(sigma_hat)
    B_new = np.zeros_like(sigma_hat)
    Lam = np.zeros_like(sigma_hat)
    primal = dual = np.inf

    for it in range(1, max_iter + 1):
        w, V = np.linalg.eigh(B + sigma_hat + mu * Lam)
        np.maximum(w, eps, out=w)
        A = (V * w) @ V.T
        A += A.T
        A *= 0.5

        if alpha != 1.0:
            A_mix = alpha * A + (1.0 - alpha) * (B + sigma_hat)
        else:
            A_mix = A
        Vmat = A_mix - sigma_hat - mu * Lam
        v = Vmat[rows, cols]
        b = v - l1_ball_project(v, mu)
        B_new[rows, cols] = b
        B_new[cols, rows] = b

        R = A_mix - B_new - sigma_hat
        Lam -= R / mu

        primal = np.linalg.norm(A - B_new - sigma_hat, "fro")
        dual = np.linalg.norm(B_new - B, "fro") / mu
        B, B_new = B_new, B
        if primal <= tol_primal * norm_ref and dual <= tol_dual:
            return A, it, primal, dual, True
    return A, max_iter, primal, dual, False


def nearest_psd(sigma_hat, cfg: AdmmConfig | None = None) -> PsdResult:
    """Project a symmetric matrix onto {A >= eps_floor * I} in max-norm."""
    if cfg is None:
        cfg = AdmmConfig()
    K = np.asarray(sigma_hat, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(K)):
        raise ValueError("matrix must be finite")
    if not np.allclose(K, K.T, atol=1e-8, rtol=0.0):
        raise ValueError("matrix must be symmetric")
    K = 0.5 * (K + K.T)
    p = K.shape[0]

    if p == 1:
        val = max(K[0, 0], cfg.eps_floor)
        out = np.array([[val]])
        return PsdResult(out, 0, 0.0, 0.0, abs(val - K[0, 0]), True, cfg.mu)

    # already feasible: the projection is the identity map
    w_min = scipy.linalg.eigh(K, eigvals_only=True, subset_by_index=(0, 0))[0]
    if w_min >= cfg.eps_floor:
        return PsdResult(K.copy(), 0, 0.0, 0.0, 0.0, True, cfg.mu)

    best = None
    for mu in (cfg.mu, *cfg.mu_restarts):
        A, it, primal, dual, ok = _admm(
            K, mu, cfg.eps_floor, cfg.tol_primal, cfg.tol_dual, cfg.max_iter,
            cfg.relaxation,
        )
        dist = float(np.max(np.abs(A - K)))
        res = PsdResult(A, it, float(primal), float(dual), dist, ok, mu)
        if best is None or (res.converged and not best.converged) or (
            res.converged == best.converged and dist < best.max_norm_distance
        ):
            best = res
        if ok:
            break
    return best
