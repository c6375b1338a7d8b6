"""Divergences of an estimate from the true parameters ``(0, I)``.

Both follow the convention ``D = 2 * KL`` (no factor one half), so

    D(mu)    = ||mu||^2
    D(Sigma) = trace(Sigma) - log det(Sigma) - p
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError

__all__ = ["DivergencePair", "divergences", "kl_location", "kl_scatter"]


@dataclass(frozen=True)
class DivergencePair:
    d_mu: float
    d_sigma: float


def kl_location(mu) -> float:
    """Squared Euclidean norm of the location estimate."""
    mu = np.asarray(mu, dtype=np.float64).ravel()
    return float(mu @ mu)


def kl_scatter(sigma) -> float:
    """``trace(S) - log det(S) - p`` computed from the eigenvalues of S.

    Raises
    ------
    DomainError
        If ``sigma`` is not square, symmetric and positive definite.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise DomainError(f"scatter matrix must be square, got shape {sigma.shape}")
    if not np.all(np.isfinite(sigma)):
        raise DomainError("scatter matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(sigma))))
    if np.max(np.abs(sigma - sigma.T)) > 1e-8 * scale:
        raise DomainError("scatter matrix is not symmetric")
    lam = np.linalg.eigvalsh(0.5 * (sigma + sigma.T))
    if lam[0] <= 0:
        raise DomainError("scatter matrix is not positive definite")
    # summing lam - log(lam) - 1 termwise avoids cancellation near I
    return float(np.sum(lam - np.log(lam) - 1.0))


def divergences(mu, sigma) -> DivergencePair:
    return DivergencePair(kl_location(mu), kl_scatter(sigma))
