"""Contaminated multivariate normal samples.

The clean part is an ``n x p`` draw from ``N_p(0, I)``.  The first
``m = floor(n * eps)`` rows are then contaminated by replacing their
first coordinate ``x1`` with ``gamma * x1 + K``.

With ``spread="all"`` the whole contaminated row is scaled instead,
``x_i -> gamma * x_i + K e_1``, so that ``gamma = 0`` puts every outlier
at the single point ``K e_1`` and ``gamma > 0`` gives a normal cluster
with covariance ``gamma**2 I`` around it.  The default ``"first"``
touches column 0 only.

Random numbers come from the counter-based Philox generator; normal
variates are obtained by inverse-CDF transformation of uniforms on the
open interval (0, 1).  The same configuration therefore always yields the
same matrix, bit for bit, on a given numpy build.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .exceptions import ConfigurationError

__all__ = [
    "SPREADS",
    "ContaminationConfig",
    "as_data_matrix",
    "derive_seed",
    "generate_sample",
    "make_rng",
    "read_csv",
    "standard_normal",
    "write_csv",
]

_SEED_MASK = (1 << 64) - 1
SPREADS = ("first", "all")


@dataclass(frozen=True)
class ContaminationConfig:
    """Parameters of one contaminated sample.

    Attributes
    ----------
    n, p : int
        Number of observations and dimension (``p <= n``).
    eps : float
        Contamination rate in ``[0, 0.5)``.
    K : float
        Outlier size, added to the first coordinate.
    gamma : float
        Outlier dispersion; ``gamma = 0`` gives a point mass at ``K``.
    seed : int
        Unsigned 64-bit seed.
    spread : {"first", "all"}
        Which coordinates of a contaminated row are scaled by ``gamma``.
    """

    n: int
    p: int
    eps: float = 0.0
    K: float = 0.0
    gamma: float = 0.0
    seed: int = 0
    spread: str = "first"

    def __post_init__(self):
        if int(self.n) != self.n or int(self.p) != self.p:
            raise ConfigurationError("n and p must be integers")
        if self.n < 1 or self.p < 1:
            raise ConfigurationError(f"dimensions must be positive, got n={self.n}, p={self.p}")
        if self.p > self.n:
            raise ConfigurationError(f"need p <= n, got n={self.n}, p={self.p}")
        if not 0.0 <= self.eps < 0.5:
            raise ConfigurationError(f"eps must lie in [0, 0.5), got {self.eps}")
        if not (math.isfinite(self.K) and self.K >= 0):
            raise ConfigurationError(f"K must be a finite nonnegative real, got {self.K}")
        if not (math.isfinite(self.gamma) and self.gamma >= 0):
            raise ConfigurationError(f"gamma must be a finite nonnegative real, got {self.gamma}")
        if not 0 <= self.seed <= _SEED_MASK:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        if self.spread not in SPREADS:
            raise ConfigurationError(f"spread must be one of {SPREADS}, got {self.spread!r}")

    @property
    def m(self) -> int:
        """Number of contaminated rows, ``floor(n * eps)``."""
        return int(math.floor(self.n * self.eps))


def derive_seed(base_seed: int, *keys: int) -> int:
    """Mix a base seed with integer keys into a new 64-bit seed.

    Uses numpy's ``SeedSequence`` hashing, so nearby keys give unrelated
    streams.  Replication ``r`` of grid cell ``c`` uses
    ``derive_seed(base, c, r)``.
    """
    entropy = [int(base_seed) & _SEED_MASK] + [int(k) & _SEED_MASK for k in keys]
    state = np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)
    return int(state[0])


def make_rng(seed: int) -> np.random.Generator:
    """Philox-backed generator for ``seed``."""
    return np.random.Generator(np.random.Philox(int(seed) & _SEED_MASK))


def standard_normal(rng: np.random.Generator, size) -> np.ndarray:
    """Standard normal variates by inverse CDF of open-interval uniforms."""
    # 53-bit integers shifted by one half so u is never 0 or 1
    k = rng.integers(0, 1 << 53, size=size, dtype=np.int64)
    u = (k.astype(np.float64) + 0.5) * 2.0 ** -53
    return ndtri(u)


def generate_sample(cfg: ContaminationConfig, *, return_clean: bool = False):
    """Draw a contaminated normal sample.

    Parameters
    ----------
    cfg : ContaminationConfig
    return_clean : bool
        If true, also return the uncontaminated draw.

    Returns
    -------
    x : ndarray, shape (n, p)
        Rows ``0 .. m-1`` are the contaminated ones.
    """
    rng = make_rng(cfg.seed)
    clean = standard_normal(rng, (cfg.n, cfg.p))
    x = clean.copy()
    m = cfg.m
    if m:
        if cfg.spread == "all":
            x[:m] = cfg.gamma * clean[:m]
            x[:m, 0] += cfg.K
        else:
            x[:m, 0] = cfg.gamma * clean[:m, 0] + cfg.K
    if return_clean:
        return x, clean
    return x


def as_data_matrix(x) -> np.ndarray:
    """Validate and return ``x`` as a finite 2-D float array."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ConfigurationError(f"data matrix must be 2-D, got shape {x.shape}")
    if x.shape[0] < 1 or x.shape[1] < 1:
        raise ConfigurationError(f"data matrix has an empty dimension: {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ConfigurationError("data matrix contains non-finite entries")
    return x


def write_csv(path, x) -> None:
    """Write a data matrix as headerless CSV with ``%.17g`` reals."""
    np.savetxt(path, as_data_matrix(x), fmt="%.17g", delimiter=",")


def read_csv(path) -> np.ndarray:
    """Read a headerless numeric CSV written by :func:`write_csv`."""
    return as_data_matrix(np.loadtxt(path, delimiter=",", ndmin=2))
