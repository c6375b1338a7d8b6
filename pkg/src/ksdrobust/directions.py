"""Projection directions for Stahel-Donoho type outlyingness.

Three generators operate on whitened data ``Z`` (zero mean, identity
sample covariance):

* :func:`kurtosis_directions` -- local maximizers and minimizers of the
  kurtosis of ``Z u`` over the unit sphere,
* :func:`specific_directions` -- normalized differences of pairs of
  observations drawn from norm strata,
* :func:`norm_extreme_directions` -- the observations themselves, for the
  ``m`` smallest and ``m`` largest norms.

Every random choice is made through a canonical ordering of the rows
(increasing norm of ``z_i``), and random starting points are built as
combinations of observations.  Both properties make the resulting pool
invariant to row permutations and equivariant under rotations of ``Z``,
hence the whole procedure is affine equivariant for a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .exceptions import (
    DegenerateDataError,
    DegenerateProjectionError,
    DimensionError,
    ParameterError,
)

__all__ = [
    "DirectionSet",
    "StandardizedData",
    "canonical_order",
    "kurtosis_coefficient",
    "kurtosis_directions",
    "n_norm_extreme",
    "n_specific",
    "norm_extreme_directions",
    "specific_directions",
    "standardize",
]

KURT_MAX = "kurtosis-max"
KURT_MIN = "kurtosis-min"
SPECIFIC = "specific"
NORM_SMALL = "norm-small"
NORM_LARGE = "norm-large"

_SINGULAR_RATIO = 1e-12
_RIDGE = 1e-8


@dataclass
class StandardizedData:
    """Whitened data ``z = (x - center) @ transform``.

    ``transform`` is the symmetric inverse square root of the sample
    covariance (plus ``ridge`` on the diagonal when that was singular).
    """

    z: np.ndarray
    center: np.ndarray
    transform: np.ndarray
    ridge: float = 0.0

    @property
    def n(self) -> int:
        return self.z.shape[0]

    @property
    def p(self) -> int:
        return self.z.shape[1]

    def apply(self, x) -> np.ndarray:
        """Map new observations into the whitened coordinates."""
        return (np.asarray(x, dtype=np.float64) - self.center) @ self.transform


@dataclass
class DirectionSet:
    """Unit directions stacked as rows, each with a provenance tag."""

    directions: np.ndarray
    provenance: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def __len__(self):
        return self.directions.shape[0]

    @classmethod
    def empty(cls, p):
        return cls(np.empty((0, p)), [], {})

    @classmethod
    def concat(cls, *sets):
        dirs = np.vstack([s.directions for s in sets])
        prov = [tag for s in sets for tag in s.provenance]
        diag = {}
        for s in sets:
            for key, val in s.diagnostics.items():
                diag[key] = diag.get(key, 0) + val if isinstance(val, (int, float)) else val
        return cls(dirs, prov, diag)


def standardize(x) -> StandardizedData:
    """Center by the sample mean and whiten by the sample covariance.

    Raises
    ------
    DimensionError
        If ``n <= p``.
    DegenerateDataError
        If every variable is constant.
    """
    x = np.asarray(x, dtype=np.float64)
    n, p = x.shape
    if n <= p:
        raise DimensionError(f"whitening needs n > p, got n={n}, p={p}")
    center = x.mean(axis=0)
    xc = x - center
    cov = xc.T @ xc / (n - 1)
    cov = 0.5 * (cov + cov.T)
    trace = float(np.trace(cov))
    if not trace > 0:
        raise DegenerateDataError("data have zero variance")
    lam, vec = np.linalg.eigh(cov)
    ridge = 0.0
    if lam[0] <= _SINGULAR_RATIO * lam[-1]:
        ridge = _RIDGE * trace / p
        lam = np.maximum(lam, 0.0) + ridge
    transform = (vec / np.sqrt(lam)) @ vec.T
    transform = 0.5 * (transform + transform.T)
    return StandardizedData(xc @ transform, center, transform, ridge)


def canonical_order(z) -> np.ndarray:
    """Row indices sorted by Euclidean norm, ties broken lexicographically."""
    z = np.asarray(z)
    norms = np.sqrt(np.einsum("ij,ij->i", z, z))
    keys = [z[:, j] for j in range(z.shape[1] - 1, -1, -1)] + [norms]
    return np.lexsort(keys)


def kurtosis_coefficient(v) -> float:
    """Moment ratio ``m4 / m2**2`` with 1/n central moments."""
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size < 2:
        raise ParameterError("kurtosis needs at least 2 values")
    c = v - v.mean()
    m2 = np.mean(c * c)
    if m2 <= (1e-14 * float(np.max(np.abs(v)))) ** 2:
        raise DegenerateProjectionError("projection has zero variance")
    return float(np.mean(c ** 4) / m2 ** 2)


def _kurt(zc, u):
    y2 = zc @ u
    y2 *= y2
    m2 = y2.sum()
    return zc.shape[0] * (y2 @ y2) / (m2 * m2)


def _kurt_and_grad(zc, u):
    """Kurtosis of ``zc @ u`` and its gradient; ``zc`` is column-centered."""
    n = zc.shape[0]
    y = zc @ u
    y2 = y * y
    m2 = y2.sum() / n
    k = (y2 @ y2) / n / (m2 * m2)
    grad = (4.0 / (n * m2 * m2)) * (zc.T @ (y2 * y - (k * m2) * y))
    # k is scale invariant in u, so grad is already tangent; project anyway
    grad -= (grad @ u) * u
    return k, grad


def _optimize_kurtosis(zc, u0, sign, tol, max_iter):
    """Projected gradient ascent (sign=+1) or descent (sign=-1) on the sphere."""
    u = u0 / np.linalg.norm(u0)
    k, g = _kurt_and_grad(zc, u)
    step = 1.0
    converged = False
    for _ in range(max_iter):
        gnorm = np.linalg.norm(g)
        if gnorm < tol:
            converged = True
            break
        step = min(step * 2.0, 1e3)
        for _ in range(60):
            cand = u + sign * step * g
            cand /= np.linalg.norm(cand)
            kc = _kurt(zc, cand)
            if sign * (kc - k) >= 1e-4 * step * gnorm * gnorm:
                break
            step *= 0.5
        else:
            # no admissible step: we are at numerical stationarity
            converged = gnorm < math.sqrt(tol)
            break
        u = cand
        k, g = _kurt_and_grad(zc, u)
    else:
        converged = np.linalg.norm(g) < tol
    return u, k, float(np.linalg.norm(g)), converged


def kurtosis_directions(zd: StandardizedData, n_kurt: int = 2, rng=None,
                        tol: float = 1e-6, max_iter: int = 100) -> DirectionSet:
    """Alternating kurtosis maximizers and minimizers.

    Each pair is searched in the orthogonal complement of the directions
    already found.  Every search runs from two starts -- a random
    combination of observations (uniform on the sphere, since ``Z'Z`` is
    proportional to the identity) and the leading (for maximization) or
    trailing (for minimization) eigenvector of the fourth-moment matrix
    ``sum_i |z_i|^2 z_i z_i'`` -- and keeps the better optimum.

    Non-converged searches return their best iterate and are counted in
    ``diagnostics['kurtosis_nonconverged']``.
    """
    if n_kurt < 2 or n_kurt % 2:
        raise ParameterError(f"n_kurt must be even and >= 2, got {n_kurt}")
    z = zd.z
    n, p = z.shape
    if n < 4:
        raise ParameterError("kurtosis directions need n >= 4")
    if n_kurt - 2 >= p:
        raise ParameterError(f"n_kurt={n_kurt} too large for p={p}")
    if rng is None:
        rng = np.random.default_rng(0)
    order = canonical_order(z)
    zc = z - z.mean(axis=0)

    found = []
    prov = []
    nonconv = 0
    basis = np.eye(p)
    for _ in range(n_kurt // 2):
        zb = zc @ basis
        w = np.einsum("ij,ij->i", zb, zb)
        fourth = (zb * w[:, None]).T @ zb
        _, evec = np.linalg.eigh(fourth)
        for sign, tag in ((1.0, KURT_MAX), (-1.0, KURT_MIN)):
            g = np.empty(n)
            g[order] = rng.standard_normal(n)
            starts = [zb.T @ g, evec[:, -1] if sign > 0 else evec[:, 0]]
            best = None
            for u0 in starts:
                if np.linalg.norm(u0) == 0:
                    continue
                res = _optimize_kurtosis(zb, u0, sign, tol, max_iter)
                if best is None or sign * (res[1] - best[1]) > 0:
                    best = res
            u, _, _, conv = best
            nonconv += not conv
            found.append(basis @ u)
            prov.append(tag)
        q, _ = np.linalg.qr(np.column_stack(found), mode="complete")
        basis = q[:, len(found):]
    dirs = np.array(found)
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return DirectionSet(dirs, prov, {"kurtosis_nonconverged": nonconv})


def n_specific(p: int, multiplier: int = 50, floor: int = 1000) -> int:
    """Number of specific directions, ``max(multiplier * p, floor)``."""
    return max(multiplier * p, floor)


def n_norm_extreme(n: int, p: int) -> int:
    """Count of smallest/largest-norm observations used, ``min(5p, n/2)``."""
    return min(5 * p, n // 2)


def _strata(order, q):
    return np.array_split(order, q)


def specific_directions(zd: StandardizedData, n_sd: int, rng,
                        max_retries: int = 10) -> DirectionSet:
    """Normalized differences of observation pairs from norm strata.

    Observations are sorted by ``|z_i|`` into ``q = min(10, n)``
    equal-frequency strata.  For each direction an unordered pair of
    distinct strata is drawn uniformly, then one observation uniformly
    inside each stratum.  Pairs of coincident points are redrawn up to
    ``max_retries`` times and then skipped (``diagnostics['specific_skipped']``).
    """
    z = zd.z
    n, p = z.shape
    if n < 2:
        raise ParameterError("specific directions need n >= 2")
    if n_sd < 1:
        raise ParameterError(f"n_sd must be >= 1, got {n_sd}")
    strata = _strata(canonical_order(z), min(10, n))
    sizes = np.array([len(s) for s in strata])
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    flat = np.concatenate(strata)
    pairs = np.array(list(combinations(range(len(strata)), 2)))

    def draw(k):
        ab = pairs[rng.integers(0, len(pairs), size=k)]
        i = flat[offsets[ab[:, 0]] + rng.integers(0, sizes[ab[:, 0]])]
        j = flat[offsets[ab[:, 1]] + rng.integers(0, sizes[ab[:, 1]])]
        return z[i] - z[j]

    diff = draw(n_sd)
    norms = np.linalg.norm(diff, axis=1)
    scale = max(1.0, float(np.max(np.abs(z))))
    bad = np.flatnonzero(norms <= 1e-12 * scale)
    for _ in range(max_retries):
        if bad.size == 0:
            break
        diff[bad] = draw(bad.size)
        norms[bad] = np.linalg.norm(diff[bad], axis=1)
        bad = bad[norms[bad] <= 1e-12 * scale]
    keep = np.ones(n_sd, dtype=bool)
    keep[bad] = False
    dirs = diff[keep] / norms[keep, None]
    return DirectionSet(dirs, [SPECIFIC] * dirs.shape[0],
                        {"specific_skipped": int(bad.size)})


def norm_extreme_directions(zd: StandardizedData, m: int) -> DirectionSet:
    """The ``m`` smallest- and ``m`` largest-norm observations, normalized.

    Zero-norm rows are skipped and counted in ``diagnostics['norm_skipped']``.
    """
    z = zd.z
    n = z.shape[0]
    if not 1 <= m <= n / 2:
        raise ParameterError(f"m must lie in [1, n/2], got m={m}, n={n}")
    order = canonical_order(z)
    norms = np.linalg.norm(z, axis=1)
    scale = max(1.0, float(np.max(norms)))
    dirs, prov, skipped = [], [], 0
    for idx, tag in ((order[:m], NORM_SMALL), (order[n - m:], NORM_LARGE)):
        ok = norms[idx] > 1e-12 * scale
        skipped += int(np.count_nonzero(~ok))
        dirs.append(z[idx[ok]] / norms[idx[ok], None])
        prov.extend([tag] * int(np.count_nonzero(ok)))
    return DirectionSet(np.vstack(dirs), prov, {"norm_skipped": skipped})
