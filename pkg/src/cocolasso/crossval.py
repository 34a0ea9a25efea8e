"""Tuning-parameter selection under measurement error.

Corrected K-fold cross-validation scores each lambda with a held-out
quadratic loss built from bias-corrected, PSD-projected fold surrogates:
beta' (S_k)+ beta - 2 rho_k' beta. The naive baseline treats the corrupted
covariates as if they were clean.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lasso import lambda_grid, solution_path
from .psd import AdmmConfig, nearest_psd
from .surrogate import CorruptedDataset, ErrorModel, build_surrogates


@dataclass
class FoldPlan:
    n: int
    k: int
    assignments: np.ndarray  # fold index in {0..k-1} per observation
    seed: int

    def train_indices(self, fold):
        return np.nonzero(self.assignments != fold)[0]

    def test_indices(self, fold):
        return np.nonzero(self.assignments == fold)[0]


@dataclass
class CvReport:
    lambdas: np.ndarray
    corrected_loss: np.ndarray | None
    naive_loss: np.ndarray | None
    lambda_selected: float
    selected_index: int
    per_fold_diagnostics: list = field(default_factory=list)


def make_folds(n, k, seed=0) -> FoldPlan:
    """Random permutation split into K near-equal contiguous blocks."""
    if k < 2:
        raise ValueError("need at least 2 folds")
    if k > n:
        raise ValueError("more folds than observations")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    assignments = np.empty(n, dtype=int)
    for fold, block in enumerate(np.array_split(perm, k)):
        assignments[block] = fold
    return FoldPlan(n, k, assignments, seed)


def _select(lambdas, loss):
    idx = int(np.argmin(loss))  # argmin takes the first index on ties
    return float(lambdas[idx]), idx


def _projection_diag(tag, fold, res):
    return {
        "fold": fold,
        "which": tag,
        "iterations": res.iterations,
        "primal_residual": res.primal_residual,
        "dual_residual": res.dual_residual,
        "max_norm_distance": res.max_norm_distance,
        "converged": res.converged,
    }


def corrected_cv(
    data: CorruptedDataset,
    model: ErrorModel,
    folds: FoldPlan,
    grid_size=100,
    lambda_min_ratio=1e-3,
    admm_cfg: AdmmConfig | None = None,
    solver_tol=1e-7,
    solver_max_iter=100_000,
    emit_naive=False,
) -> CvReport:
    """Corrected K-fold CV; all folds share the full-data lambda grid."""
    if admm_cfg is None:
        admm_cfg = AdmmConfig()
    full = build_surrogates(data, model)
    lambdas = lambda_grid(full.rho_tilde, grid_size, lambda_min_ratio)

    corrected = np.zeros(lambdas.size)
    naive = np.zeros(lambdas.size) if emit_naive else None
    diagnostics = []
    for fold in range(folds.k):
        tr = folds.train_indices(fold)
        te = folds.test_indices(fold)
        if tr.size < 2 or te.size < 1:
            raise ValueError(f"fold {fold} is degenerate")
        train = data.rows(tr)
        test = data.rows(te)

        surr = build_surrogates(train, model)
        proj = nearest_psd(surr.sigma_hat, admm_cfg)
        diagnostics.append(_projection_diag("train", fold, proj))
        path = solution_path(
            proj.sigma_tilde, surr.rho_tilde, lambdas=lambdas,
            tol=solver_tol, max_iter=solver_max_iter, check_psd=False,
        )

        held = build_surrogates(test, model)
        held_proj = nearest_psd(held.sigma_hat, admm_cfg)
        diagnostics.append(_projection_diag("validate", fold, held_proj))
        B = path.betas
        corrected += np.einsum("ij,jk,ik->i", B, held_proj.sigma_tilde, B)
        corrected -= 2.0 * B @ held.rho_tilde
        if emit_naive:
            resid = test.y[None, :] - B @ test.z.T
            naive += (resid**2).mean(axis=1)

    lam, idx = _select(lambdas, corrected)
    return CvReport(lambdas, corrected, naive, lam, idx, diagnostics)


def naive_cv(
    data: CorruptedDataset,
    folds: FoldPlan,
    grid_size=100,
    lambda_min_ratio=1e-3,
    admm_cfg: AdmmConfig | None = None,
    solver_tol=1e-7,
    solver_max_iter=100_000,
    model: ErrorModel | None = None,
) -> CvReport:
    """Naive K-fold CV with the biased held-out residual loss.

    If an error model is supplied, training still uses the bias-corrected
    projected surrogates (only the validation loss is naive); otherwise the
    corrupted covariates are treated as clean end to end.
    """
    if admm_cfg is None:
        admm_cfg = AdmmConfig()
    if model is not None:
        full = build_surrogates(data, model)
        lambdas = lambda_grid(full.rho_tilde, grid_size, lambda_min_ratio)
    else:
        rho = data.z.T @ data.y / data.n
        lambdas = lambda_grid(rho, grid_size, lambda_min_ratio)

    loss = np.zeros(lambdas.size)
    diagnostics = []
    for fold in range(folds.k):
        tr = folds.train_indices(fold)
        te = folds.test_indices(fold)
        if tr.size < 2 or te.size < 1:
            raise ValueError(f"fold {fold} is degenerate")
        train = data.rows(tr)
        if model is not None:
            surr = build_surrogates(train, model)
            sigma_tr, rho_tr = surr.sigma_hat, surr.rho_tilde
        else:
            sigma_tr = train.z.T @ train.z / tr.size
            sigma_tr = 0.5 * (sigma_tr + sigma_tr.T)
            rho_tr = train.z.T @ train.y / tr.size
        proj = nearest_psd(sigma_tr, admm_cfg)
        diagnostics.append(_projection_diag("train", fold, proj))
        path = solution_path(
            proj.sigma_tilde, rho_tr, lambdas=lambdas,
            tol=solver_tol, max_iter=solver_max_iter, check_psd=False,
        )
        zte, yte = data.z[te], data.y[te]
        resid = yte[None, :] - path.betas @ zte.T
        loss += (resid**2).mean(axis=1)

    lam, idx = _select(lambdas, loss)
    return CvReport(lambdas, None, loss, lam, idx, diagnostics)
