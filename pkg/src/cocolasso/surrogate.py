"""Unbiased surrogates for the Gram matrix and cross-moment vector.

With corrupted covariates Z the sample moments Z'Z/n and Z'y/n are biased for
X'X/n and X'y/n. Each supported corruption mechanism (additive error,
multiplicative error, missing-at-random entries) admits a closed-form
bias correction; the corrected Gram surrogate may be indefinite, which is
handled downstream by the max-norm PSD projection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class CorruptedDataset:
    """Observed covariates and response.

    Missing entries are stored as 0 with mask=False; the mask is all-True for
    fully observed data.
    """

    z: np.ndarray
    y: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.z.ndim != 2:
            raise ValueError("z must be a 2-d matrix")
        if self.z.shape[0] != self.y.size:
            raise ValueError("z and y have inconsistent row counts")
        if self.mask is None:
            self.mask = np.ones(self.z.shape, dtype=bool)
        else:
            self.mask = np.asarray(self.mask, dtype=bool)
            if self.mask.shape != self.z.shape:
                raise ValueError("mask shape must match z")
        if not np.all(np.isfinite(self.z)):
            raise ValueError("z contains non-finite entries")
        if not np.all(np.isfinite(self.y)):
            raise ValueError("y contains non-finite entries")
        if not np.all(self.z[~self.mask] == 0):
            raise ValueError("masked entries of z must be stored as 0")

    @property
    def n(self):
        return self.z.shape[0]

    @property
    def p(self):
        return self.z.shape[1]

    def rows(self, idx) -> "CorruptedDataset":
        return CorruptedDataset(self.z[idx], self.y[idx], self.mask[idx])


@dataclass
class AdditiveError:
    """Z = X + A with known error covariance."""

    sigma_a: np.ndarray

    def __post_init__(self):
        self.sigma_a = np.asarray(self.sigma_a, dtype=float)
        if self.sigma_a.ndim != 2 or self.sigma_a.shape[0] != self.sigma_a.shape[1]:
            raise ValueError("sigma_a must be square")
        if not np.allclose(self.sigma_a, self.sigma_a.T, atol=1e-10):
            raise ValueError("sigma_a must be symmetric")
        if np.any(np.diag(self.sigma_a) < 0):
            raise ValueError("sigma_a must have a nonnegative diagonal")


@dataclass
class MultiplicativeError:
    """Z = X (.) M with known first and second moments of the error rows."""

    mu_m: np.ndarray
    sigma_m: np.ndarray

    def __post_init__(self):
        self.mu_m = np.asarray(self.mu_m, dtype=float).ravel()
        self.sigma_m = np.asarray(self.sigma_m, dtype=float)
        p = self.mu_m.size
        if self.sigma_m.shape != (p, p):
            raise ValueError("sigma_m shape must match mu_m")
        if np.any(self.mu_m <= 0):
            raise ValueError("all entries of mu_m must be strictly positive")
        if np.any(self.second_moment() <= 0):
            raise ValueError(
                "all entries of sigma_m + mu_m mu_m' must be strictly positive"
            )

    def second_moment(self):
        return self.sigma_m + np.outer(self.mu_m, self.mu_m)


@dataclass
class MissingData:
    """Entries missing completely at random with per-column probabilities."""

    rates: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.rates = np.atleast_1d(np.asarray(self.rates, dtype=float))
        if np.any(self.rates < 0) or np.any(self.rates >= 1):
            raise ValueError("missing rates must lie in [0, 1)")


ErrorModel = AdditiveError | MultiplicativeError | MissingData


@dataclass
class SurrogatePair:
    """Bias-corrected Gram matrix and cross-moment vector.

    sigma_hat is exactly symmetric but may be indefinite.
    """

    sigma_hat: np.ndarray
    rho_tilde: np.ndarray


def _raw_moments(data: CorruptedDataset):
    gram = data.z.T @ data.z / data.n
    cross = data.z.T @ data.y / data.n
    return gram, cross


def _symmetrize(M):
    return 0.5 * (M + M.T)


def surrogate_additive(data: CorruptedDataset, sigma_a) -> SurrogatePair:
    """Surrogates for Z = X + A: subtract the known error covariance."""
    model = sigma_a if isinstance(sigma_a, AdditiveError) else AdditiveError(sigma_a)
    if model.sigma_a.shape != (data.p, data.p):
        raise ValueError("sigma_a dimensions do not match the data")
    if not fully_observed(data):
        raise ValueError("additive model requires fully observed data")
    gram, cross = _raw_moments(data)
    return SurrogatePair(_symmetrize(gram - model.sigma_a), cross)


def surrogate_multiplicative(data: CorruptedDataset, mu_m, sigma_m=None) -> SurrogatePair:
    """Surrogates for Z = X (.) M via elementwise division by error moments."""
    if isinstance(mu_m, MultiplicativeError):
        model = mu_m
    else:
        model = MultiplicativeError(mu_m, sigma_m)
    if model.mu_m.size != data.p:
        raise ValueError("mu_m dimensions do not match the data")
    gram, cross = _raw_moments(data)
    sigma_hat = gram / model.second_moment()
    rho_tilde = cross / model.mu_m
    return SurrogatePair(_symmetrize(sigma_hat), rho_tilde)


def surrogate_missing(data: CorruptedDataset, rates) -> SurrogatePair:
    """Missing-at-random surrogates, a Bernoulli multiplicative special case.

    With observation indicators m_ij ~ Bernoulli(1 - r_j) the induced error
    moments are E m_j = 1 - r_j, E m_j^2 = 1 - r_j and
    E m_j m_k = (1 - r_j)(1 - r_k) for j != k.
    """
    model = rates if isinstance(rates, MissingData) else MissingData(rates)
    r = np.broadcast_to(model.rates, (data.p,)).astype(float)
    obs = 1.0 - r
    second = np.outer(obs, obs)
    np.fill_diagonal(second, obs)
    gram, cross = _raw_moments(data)
    return SurrogatePair(_symmetrize(gram / second), cross / obs)


def estimate_missing_rates(data: CorruptedDataset):
    """Per-column fraction of masked entries."""
    r_hat = 1.0 - data.mask.mean(axis=0)
    full = np.nonzero(np.isclose(r_hat, 1.0))[0]
    if full.size:
        raise ValueError(
            f"columns {full.tolist()} are fully missing; surrogate undefined"
        )
    return r_hat


def build_surrogates(data: CorruptedDataset, model: ErrorModel) -> SurrogatePair:
    """Dispatch on the error model variant."""
    if isinstance(model, AdditiveError):
        return surrogate_additive(data, model)
    if isinstance(model, MultiplicativeError):
        return surrogate_multiplicative(data, model)
    if isinstance(model, MissingData):
        return surrogate_missing(data, model)
    raise TypeError(f"unsupported error model: {type(model).__name__}")


def fully_observed(data: CorruptedDataset):
    return bool(np.all(data.mask))
