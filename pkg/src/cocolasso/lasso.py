"""Coordinate descent for the quadratic-form Lasso.

Solves min_beta (1/2) beta' S beta - rho' beta + lam * ||beta||_1 for a PSD
matrix S and vector rho. Working directly on the Gram form avoids requiring a
strictly positive definite S; a Cholesky reformulation to a residual-sum-of-
squares Lasso is provided for interop and testing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
import scipy.linalg

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 100_000
_PSD_SLACK = 1e-8


@dataclass
class QuadraticProblem:
    sigma_tilde: np.ndarray
    rho_tilde: np.ndarray
    lam: float

    def __post_init__(self):
        self.sigma_tilde = np.asarray(self.sigma_tilde, dtype=float)
        self.rho_tilde = np.asarray(self.rho_tilde, dtype=float)
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.sigma_tilde.shape != (self.rho_tilde.size,) * 2:
            raise ValueError("sigma_tilde / rho_tilde dimension mismatch")

    def objective(self, beta):
        beta = np.asarray(beta, dtype=float)
        return float(
            0.5 * beta @ self.sigma_tilde @ beta
            - self.rho_tilde @ beta
            + self.lam * np.abs(beta).sum()
        )


@dataclass
class SolutionPath:
    lambdas: np.ndarray
    betas: np.ndarray  # (grid, p)
    kkt_residuals: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray


@dataclass
class CholeskyReformulation:
    z_tilde: np.ndarray
    y_tilde: np.ndarray


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def kkt_residual(sigma, rho, lam, beta):
    """Max violation of the subgradient stationarity conditions."""
    g = sigma @ beta - rho
    active = beta != 0
    res_inactive = np.maximum(np.abs(g[~active]) - lam, 0.0)
    res_active = np.abs(g[active] + lam * np.sign(beta[active]))
    out = 0.0
    if res_inactive.size:
        out = max(out, res_inactive.max())
    if res_active.size:
        out = max(out, res_active.max())
    return float(out)


def _check_psd(sigma):
    w_min = scipy.linalg.eigh(sigma, eigvals_only=True, subset_by_index=(0, 0))[0]
    if w_min < -_PSD_SLACK * max(1.0, np.abs(np.diag(sigma)).max()):
        raise ValueError(f"sigma_tilde is not PSD (lambda_min = {w_min:.3e})")


@numba.njit(cache=True)
def _cd_subproblem(sub_sigma, sub_rho, lam, beta_a, tol, budget):
    """Cyclic CD on the dense subproblem restricted to the working set."""
    k = beta_a.size
    grad = sub_sigma @ beta_a
    sweeps = 0
    while sweeps < budget:
        sweeps += 1
        max_delta = 0.0
        for j in range(k):
            d = sub_sigma[j, j]
            old = beta_a[j]
            z = sub_rho[j] - grad[j] + d * old
            az = abs(z) - lam
            new = 0.0
            if az > 0.0:
                new = az / d if z > 0.0 else -az / d
            if new != old:
                beta_a[j] = new
                diff = new - old
                for i in range(k):
                    grad[i] += sub_sigma[i, j] * diff
                delta = abs(diff)
                if delta > max_delta:
                    max_delta = delta
        if max_delta <= tol:
            break
    return sweeps


def solve(
    sigma,
    rho=None,
    lam=None,
    beta0=None,
    tol=DEFAULT_TOL,
    max_iter=DEFAULT_MAX_ITER,
    check_psd=True,
):
    """Cyclic coordinate descent with an active-set strategy.

    Accepts either ``solve(problem, ...)`` with a QuadraticProblem or the
    unpacked form ``solve(sigma, rho, lam, ...)``. Returns ``(beta, info)``
    where info holds iterations, kkt residual and a convergence flag.
    Coordinates with a zero diagonal are pinned at 0.
    """
    if isinstance(sigma, QuadraticProblem):
        if rho is not None or lam is not None:
            raise TypeError("pass either a QuadraticProblem or (sigma, rho, lam)")
        sigma, rho, lam = sigma.sigma_tilde, sigma.rho_tilde, sigma.lam
    elif rho is None or lam is None:
        raise TypeError("rho and lam are required without a QuadraticProblem")
    sigma = np.asarray(sigma, dtype=float)
    rho = np.asarray(rho, dtype=float)
    p = rho.size
    if sigma.shape != (p, p):
        raise ValueError("dimension mismatch")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if check_psd:
        _check_psd(sigma)

    diag = np.diag(sigma)
    pinned = diag <= 0
    beta = np.zeros(p) if beta0 is None else np.asarray(beta0, dtype=float).copy()
    beta[pinned] = 0.0

    # working-set strategy: solve the dense subproblem on the current set,
    # then screen the full stationarity conditions and absorb violators
    work = np.nonzero(beta)[0]
    sweeps = 0
    converged = False
    kkt = np.inf
    tol_inner = tol
    for _ in range(200):
        if work.size:
            sub = sigma[np.ix_(work, work)]
            beta_a = beta[work]
            sweeps += _cd_subproblem(
                sub, rho[work], lam, beta_a, tol_inner, max_iter - sweeps
            )
            beta[work] = beta_a
        g = (sigma[:, work] @ beta[work] - rho) if work.size else -rho
        viol = np.abs(g) - lam
        viol[~pinned & (beta != 0)] = 0.0
        viol[pinned] = 0.0
        kkt = kkt_residual(sigma, rho, lam, beta)
        if viol.max(initial=0.0) <= 0.0 and kkt <= 10.0 * tol:
            converged = True
            break
        if sweeps >= max_iter:
            break
        grow = np.nonzero(viol > 0.0)[0]
        if grow.size == 0:
            # working set is right but the certificate is loose: tighten
            tol_inner *= 0.1
            continue
        work = np.union1d(work, grow)

    info = {
        "iterations": sweeps,
        "converged": converged,
        "kkt_residual": kkt,
    }
    return beta, info


def lambda_grid(rho, grid_size=100, lambda_min_ratio=1e-3):
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    if not 0 < lambda_min_ratio < 1:
        raise ValueError("lambda_min_ratio must lie in (0, 1)")
    lam_max = float(np.abs(rho).max())
    if lam_max <= 0:
        raise ValueError("rho is identically zero; the path is trivial")
    return np.geomspace(lam_max, lam_max * lambda_min_ratio, grid_size)


def solution_path(
    sigma,
    rho,
    grid_size=100,
    lambda_min_ratio=1e-3,
    lambdas=None,
    tol=DEFAULT_TOL,
    max_iter=DEFAULT_MAX_ITER,
    check_psd=True,
) -> SolutionPath:
    """Warm-started solves over a decreasing log-spaced lambda grid."""
    sigma = np.asarray(sigma, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if lambdas is None:
        lambdas = lambda_grid(rho, grid_size, lambda_min_ratio)
    else:
        lambdas = np.asarray(lambdas, dtype=float)
        if lambdas.size > 1 and not np.all(np.diff(lambdas) < 0):
            raise ValueError("lambdas must be strictly decreasing")
    if check_psd:
        _check_psd(sigma)

    m, p = lambdas.size, rho.size
    betas = np.zeros((m, p))
    kkt = np.zeros(m)
    iters = np.zeros(m, dtype=int)
    conv = np.zeros(m, dtype=bool)
    beta = np.zeros(p)
    for i, lam in enumerate(lambdas):
        beta, info = solve(
            sigma, rho, lam, beta0=beta, tol=tol, max_iter=max_iter,
            check_psd=False,
        )
        betas[i] = beta
        kkt[i] = info["kkt_residual"]
        iters[i] = info["iterations"]
        conv[i] = info["converged"]
    return SolutionPath(lambdas, betas, kkt, iters, conv)


def cholesky_reformulate(sigma_tilde, rho_vec, n) -> CholeskyReformulation:
    """Rewrite the quadratic form as a standard Lasso design.

    Produces z_tilde with z_tilde' z_tilde / n = sigma_tilde and y_tilde with
    z_tilde' y_tilde = n * rho_vec. Requires a strictly PD input; callers
    holding a merely PSD matrix should re-project with a positive eigenvalue
    floor first.
    """
    sigma_tilde = np.asarray(sigma_tilde, dtype=float)
    rho_vec = np.asarray(rho_vec, dtype=float)
    if n < 1:
        raise ValueError("n must be a positive integer")
    try:
        L = scipy.linalg.cholesky(sigma_tilde, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise ValueError(
            "sigma_tilde is not positive definite; project with a positive "
            "eps_floor before the Cholesky reformulation"
        ) from exc
    z_tilde = np.sqrt(n) * L.T
    y_tilde = scipy.linalg.solve_triangular(
        L, np.sqrt(n) * rho_vec, lower=True
    )
    return CholeskyReformulation(z_tilde, y_tilde)
