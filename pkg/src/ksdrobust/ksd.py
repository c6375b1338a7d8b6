"""Kurtosis plus specific directions (KSD) initial estimator.

The estimator whitens the data, builds a pool of projection directions,
computes Stahel-Donoho outlyingness along them and deletes the
observations whose outlyingness exceeds a cutoff.  The whole procedure is
then repeated on the retained observations until the set of flagged
observations no longer changes.

Two pool recipes are provided:

``old``
    two kurtosis directions and ``10 p`` specific directions;
``new``
    two kurtosis directions, ``max(50 p, 1000)`` specific directions and
    the ``m = min(5p, n/2)`` smallest- and largest-norm whitened
    observations used as directions themselves.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np

from . import directions as dirs
from .datagen import as_data_matrix, make_rng
from .exceptions import (
    DegenerateDataError,
    DegenerateProjectionError,
    DimensionError,
    ParameterError,
)

__all__ = [
    "KsdConfig",
    "OutlyingnessResult",
    "RobustEstimate",
    "build_pool",
    "ksd_estimate",
    "min_retained",
    "outlyingness",
]

MAD_NORMAL = 1.4826

_VARIANT_DEFAULTS = {
    "old": dict(m_sd=10, sd_floor=0, use_norm_directions=False),
    "new": dict(m_sd=50, sd_floor=1000, use_norm_directions=True),
}


@dataclass(frozen=True)
class KsdConfig:
    """Settings of the KSD estimator.

    ``m_sd``, ``sd_floor`` and ``use_norm_directions`` default to the
    values implied by ``variant`` when left as ``None``; the number of
    specific directions is ``max(m_sd * p, sd_floor)``.
    """

    variant: str = "new"
    n_kurt: int = 2
    m_sd: int | None = None
    sd_floor: int | None = None
    use_norm_directions: bool | None = None
    cutoff: float = 4.0
    max_refine_iters: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.variant not in _VARIANT_DEFAULTS:
            raise ParameterError(f"variant must be 'old' or 'new', got {self.variant!r}")
        for key, val in _VARIANT_DEFAULTS[self.variant].items():
            if getattr(self, key) is None:
                object.__setattr__(self, key, val)
        if self.n_kurt < 2 or self.n_kurt % 2:
            raise ParameterError("n_kurt must be even and >= 2")
        if self.m_sd < 1 or self.sd_floor < 0:
            raise ParameterError("m_sd must be >= 1 and sd_floor >= 0")
        if not self.cutoff > 0:
            raise ParameterError("cutoff must be positive")
        if self.max_refine_iters < 1:
            raise ParameterError("max_refine_iters must be >= 1")

    def n_sd(self, p: int) -> int:
        return dirs.n_specific(p, self.m_sd, self.sd_floor)

    def with_seed(self, seed):
        return replace(self, seed=seed)


@dataclass
class OutlyingnessResult:
    """Outlyingness ``t`` of every observation and the maximizing direction."""

    t: np.ndarray
    argmax_direction: np.ndarray
    skipped: int = 0


@dataclass
class RobustEstimate:
    """Location/scatter estimate together with the retained-observation mask."""

    mu: np.ndarray
    sigma: np.ndarray
    retained: np.ndarray
    iterations: int
    converged: bool
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        out = {
            "mu": self.mu.tolist(),
            "sigma": self.sigma.ravel().tolist(),
            "p": int(self.mu.size),
            "retained": self.retained.astype(bool).tolist(),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "diagnostics": _jsonable(self.diagnostics),
        }
        return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def min_retained(n: int, p: int) -> int:
    """Smallest admissible retained-set size, ``ceil((n + p + 1) / 2)``."""
    return math.ceil((n + p + 1) / 2)


def outlyingness(zd, pool, reference=None) -> OutlyingnessResult:
    """Stahel-Donoho outlyingness of the rows of ``zd.z``.

    ``t_i = max_d |<z_i, d> - med_d| / (1.4826 * MAD_d)``, where the median
    and MAD of each projection are taken over the ``reference`` rows (all
    rows by default).  Directions whose raw MAD vanishes are skipped.

    Parameters
    ----------
    zd : StandardizedData or ndarray
        Whitened observations.
    pool : DirectionSet or ndarray
        Directions as rows.
    reference : boolean mask, optional
        Rows defining the robust center and spread of each projection.
    """
    z = zd.z if hasattr(zd, "z") else np.asarray(zd, dtype=np.float64)
    d = pool.directions if hasattr(pool, "directions") else np.asarray(pool, dtype=np.float64)
    if d.shape[0] == 0:
        raise ParameterError("direction pool is empty")
    # directions as rows: medians then run over contiguous memory
    proj = d @ z.T
    ref = proj if reference is None else proj[:, np.asarray(reference, dtype=bool)]
    med = np.median(ref, axis=1)
    dev = np.abs(ref - med[:, None])
    mad = np.median(dev, axis=1)
    scale = np.max(np.abs(ref), axis=1)
    ok = mad > 1e-12 * np.maximum(scale, 1e-300)
    if not np.any(ok):
        raise DegenerateProjectionError("every projection has zero MAD")
    skipped = int(np.count_nonzero(~ok))
    cols = np.flatnonzero(ok)
    if skipped:
        proj, med, mad = proj[cols], med[cols], mad[cols]
    proj -= med[:, None]
    np.abs(proj, out=proj)
    proj *= (1.0 / (MAD_NORMAL * mad))[:, None]
    best = np.argmax(proj, axis=0)
    t = proj[best, np.arange(proj.shape[1])]
    return OutlyingnessResult(t, cols[best], skipped)


def build_pool(zd, cfg: KsdConfig, rng) -> dirs.DirectionSet:
    """Kurtosis, specific and (optionally) norm-extreme directions for ``zd``."""
    n, p = zd.z.shape
    parts = [
        dirs.kurtosis_directions(zd, cfg.n_kurt, rng),
        dirs.specific_directions(zd, cfg.n_sd(p), rng),
    ]
    if cfg.use_norm_directions:
        m = dirs.n_norm_extreme(n, p)
        if m >= 1:
            parts.append(dirs.norm_extreme_directions(zd, m))
    return dirs.DirectionSet.concat(*parts)


def ksd_estimate(x, cfg: KsdConfig | None = None) -> RobustEstimate:
    """KSD location and scatter with the delete-and-repeat refinement.

    Each round whitens the currently retained observations, draws a fresh
    direction pool from them, and flags every observation (retained or
    not) whose outlyingness relative to the retained projections exceeds
    ``cfg.cutoff``.  If fewer than ``ceil((n+p+1)/2)`` observations would
    survive, the least outlying flagged ones are reinstated.  Rounds stop
    once two consecutive flag sets coincide.

    Returns the sample mean and covariance of the final retained set.
    """
    cfg = cfg or KsdConfig()
    x = as_data_matrix(x)
    n, p = x.shape
    if n <= 2 * p:
        raise DimensionError(f"KSD needs n > 2p, got n={n}, p={p}")
    h = min_retained(n, p)
    retained = np.ones(n, dtype=bool)
    flagged = None
    converged = False
    skips = Counter()
    iterations = 0
    for iterations in range(1, cfg.max_refine_iters + 1):
        zd = dirs.standardize(x[retained])
        # same stream every round: the round is then a deterministic map of
        # the retained set, so a repeated set means a fixed point
        pool = build_pool(zd, cfg, make_rng(cfg.seed))
        out = outlyingness(zd.apply(x), pool, reference=retained)
        skips.update(pool.diagnostics)
        skips["zero_mad"] += out.skipped
        new_flag = out.t > cfg.cutoff
        if n - np.count_nonzero(new_flag) < h:
            keep = np.argsort(out.t, kind="stable")[:h]
            new_flag = np.ones(n, dtype=bool)
            new_flag[keep] = False
        if flagged is not None and np.array_equal(new_flag, flagged):
            converged = True
            break
        flagged = new_flag
        retained = ~flagged

    xr = x[retained]
    mu = xr.mean(axis=0)
    xc = xr - mu
    sigma = xc.T @ xc / (xr.shape[0] - 1)
    sigma = 0.5 * (sigma + sigma.T)
    lam = np.linalg.eigvalsh(sigma)
    if not lam[0] > 0:
        trace = float(np.trace(sigma))
        if not trace > 0:
            raise DegenerateDataError("retained observations have zero variance")
        sigma = sigma + dirs._RIDGE * trace / p * np.eye(p)
        if not np.linalg.eigvalsh(sigma)[0] > 0:
            raise DegenerateDataError("retained covariance is singular")

    prov = np.asarray(pool.provenance)[out.argmax_direction]
    diagnostics = dict(skips)
    diagnostics["pool_size"] = len(pool)
    diagnostics["flagged_argmax_provenance"] = dict(Counter(prov[flagged].tolist()))
    return RobustEstimate(mu, sigma, retained.copy(), iterations, converged, diagnostics)
