import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ksdrobust import directions as D
from ksdrobust.directions import (
    DirectionSet,
    canonical_order,
    kurtosis_coefficient,
    kurtosis_directions,
    n_norm_extreme,
    n_specific,
    norm_extreme_directions,
    specific_directions,
    standardize,
)
from ksdrobust.datagen import make_rng
from ksdrobust.exceptions import (
    DegenerateDataError,
    DegenerateProjectionError,
    DimensionError,
    ParameterError,
)

from conftest import random_rotation


def _gradient_norm(z, u):
    zc = z - z.mean(axis=0)
    return np.linalg.norm(D._kurt_and_grad(zc, u)[1])


# -- standardize ---------------------------------------------------------

def test_whitening_identity_fixed_point(rng):
    y = standardize(rng.standard_normal((50, 3))).z
    zd = standardize(y)
    np.testing.assert_allclose(zd.z, y, atol=1e-12)
    np.testing.assert_allclose(zd.transform, np.eye(3), atol=1e-12)


def test_whitening_diagonal_scaling(rng):
    y = standardize(rng.standard_normal((40, 2))).z
    zd = standardize(2.0 * y)
    np.testing.assert_allclose(zd.transform, 0.5 * np.eye(2), atol=1e-12)
    np.testing.assert_allclose(np.cov(zd.z.T), np.eye(2), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(5, 60), p=st.integers(1, 4), seed=st.integers(0, 10**6))
def test_whitened_covariance_is_identity(n, p, seed):
    r = np.random.default_rng(seed)
    b = r.standard_normal((p, p)) + 3 * np.eye(p)
    x = r.standard_normal((n + p, p)) @ b + r.uniform(-100, 100, p)
    zd = standardize(x)
    assert np.linalg.norm(np.cov(zd.z.T).reshape(p, p) - np.eye(p)) < 1e-8
    assert np.all(np.abs(zd.z.mean(axis=0)) < 1e-10 * max(1.0, np.abs(zd.z).max()))
    np.testing.assert_allclose(zd.apply(x), zd.z, atol=1e-9)


def test_whitening_ridge_fallback(rng):
    x = rng.standard_normal((30, 2))
    x = np.column_stack([x, x[:, 0] + x[:, 1]])  # rank 2
    zd = standardize(x)
    assert zd.ridge > 0
    assert np.all(np.isfinite(zd.z))


def test_whitening_errors():
    with pytest.raises(DimensionError):
        standardize(np.ones((3, 3)))
    with pytest.raises(DegenerateDataError):
        standardize(np.ones((5, 2)))


def test_canonical_order_is_permutation_invariant(rng):
    z = rng.standard_normal((20, 3))
    perm = rng.permutation(20)
    np.testing.assert_array_equal(perm[canonical_order(z[perm])], canonical_order(z))


# -- kurtosis ------------------------------------------------------------

def test_kurtosis_examples():
    assert kurtosis_coefficient([-1, -1, 1, 1]) == 1.0
    assert kurtosis_coefficient([-1, 0, 1]) == pytest.approx(1.5, rel=1e-15)


def test_kurtosis_normal_sample():
    v = make_rng(77).standard_normal(10_000)
    assert abs(kurtosis_coefficient(v) - 3.0) < 0.2


def test_kurtosis_degenerate():
    with pytest.raises(DegenerateProjectionError):
        kurtosis_coefficient([2.0, 2.0, 2.0, 2.0])
    with pytest.raises(ParameterError):
        kurtosis_coefficient([1.0])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=40),
       st.floats(0.01, 100).map(lambda a: a) | st.floats(-100, -0.01), st.floats(-1e3, 1e3))
def test_kurtosis_affine_invariance(vals, a, b):
    v = np.array(vals)
    if np.std(v) < 1e-3 * max(1.0, np.abs(v).max()):
        return
    k = kurtosis_coefficient(v)
    assert kurtosis_coefficient(a * v + b) == pytest.approx(k, rel=1e-10)
    assert k >= 1.0 - 1e-12


def test_kurtosis_gradient_matches_finite_differences(rng):
    z = rng.standard_normal((40, 4)) ** 3
    zc = z - z.mean(axis=0)
    u = rng.standard_normal(4)
    u /= np.linalg.norm(u)
    _, g = D._kurt_and_grad(zc, u)
    h = 1e-6
    fd = np.empty(4)
    for j in range(4):
        e = np.zeros(4)
        e[j] = h
        fd[j] = (D._kurt(zc, u + e) - D._kurt(zc, u - e)) / (2 * h)
    fd -= (fd @ u) * u
    np.testing.assert_allclose(g, fd, atol=1e-6)


def _planted_2d(seed=5):
    # 90 normal points plus 10 far out along e1: the max-kurtosis axis is e1
    r = np.random.default_rng(seed)
    x = r.standard_normal((100, 2))
    x[:10, 0] = r.choice([-1.0, 1.0], 10) * r.uniform(5, 8, 10)
    return standardize(x)


def test_kurtosis_max_matches_grid_oracle():
    zd = _planted_2d()
    ds = kurtosis_directions(zd, 2, make_rng(1))
    ang = np.arange(3600) * (np.pi / 3600)  # half circle suffices: k(u) = k(-u)
    grid = np.column_stack([np.cos(ang), np.sin(ang)])
    kv = np.array([kurtosis_coefficient(zd.z @ g) for g in grid])
    best = grid[np.argmax(kv)]
    u = ds.directions[0]
    angle = math.degrees(math.acos(min(1.0, abs(u @ best))))
    assert ds.provenance[0] == "kurtosis-max"
    assert angle < 5.0


def test_kurtosis_min_matches_grid_oracle():
    # a bimodal axis is the kurtosis minimum
    r = np.random.default_rng(2)
    x = r.standard_normal((120, 2))
    x[:, 1] += np.where(np.arange(120) < 60, -3.0, 3.0)
    zd = standardize(x)
    ds = kurtosis_directions(zd, 2, make_rng(3))
    ang = np.arange(3600) * (np.pi / 3600)
    grid = np.column_stack([np.cos(ang), np.sin(ang)])
    kv = np.array([kurtosis_coefficient(zd.z @ g) for g in grid])
    best = grid[np.argmin(kv)]
    assert ds.provenance[1] == "kurtosis-min"
    assert math.degrees(math.acos(min(1.0, abs(ds.directions[1] @ best)))) < 5.0


def test_kurtosis_directions_contract(rng):
    zd = standardize(rng.standard_normal((80, 5)) ** 3)
    ds = kurtosis_directions(zd, 4, make_rng(0))
    assert len(ds) == 4
    assert ds.provenance == ["kurtosis-max", "kurtosis-min"] * 2
    np.testing.assert_allclose(np.linalg.norm(ds.directions, axis=1), 1.0, atol=1e-12)
    # deflation: later pairs orthogonal to earlier ones
    assert np.all(np.abs(ds.directions[:2] @ ds.directions[2:].T) < 1e-10)
    if ds.diagnostics["kurtosis_nonconverged"] == 0:
        for u in ds.directions[:2]:
            assert _gradient_norm(zd.z, u) < 1e-6


def test_kurtosis_symmetric_design():
    # cross design: +-e_j repeated, every direction has the same 4th moment ratio in 2-D
    pts = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]] * 5, dtype=float)
    zd = standardize(pts)
    ds = kurtosis_directions(zd, 2, make_rng(0))
    assert len(ds) == 2
    np.testing.assert_allclose(np.linalg.norm(ds.directions, axis=1), 1.0, atol=1e-12)
    for u in ds.directions:
        assert 1.0 <= kurtosis_coefficient(zd.z @ u) <= 2.0 + 1e-9


def test_kurtosis_rotation_equivariance(rng):
    zd = _planted_2d(8)
    q = random_rotation(2, rng)
    zq = D.StandardizedData(zd.z @ q, zd.center, zd.transform)
    a = kurtosis_directions(zd, 2, make_rng(4)).directions
    b = kurtosis_directions(zq, 2, make_rng(4)).directions
    for u, v in zip(a, b):
        assert abs(abs((u @ q) @ v) - 1) < 1e-6


def test_kurtosis_parameter_errors(rng):
    zd = standardize(rng.standard_normal((20, 3)))
    for bad in (0, 1, 3):
        with pytest.raises(ParameterError):
            kurtosis_directions(zd, bad)
    with pytest.raises(ParameterError):
        kurtosis_directions(zd, 6)


# -- specific directions -------------------------------------------------

def test_specific_pair_example():
    # with two observations every draw is the pair itself
    z = np.array([[0.0, 0.0], [3.0, 4.0]])
    ds = specific_directions(D.StandardizedData(z, np.zeros(2), np.eye(2)), 5, make_rng(0))
    np.testing.assert_allclose(np.abs(ds.directions), np.tile([0.6, 0.8], (5, 1)), atol=1e-15)


def test_specific_counts():
    assert n_specific(30) == 1500
    assert n_specific(10) == 1000
    assert n_specific(30, 10, 0) == 300


def test_specific_directions_unit_and_count(rng):
    zd = standardize(rng.standard_normal((100, 30)))
    ds = specific_directions(zd, 1500, make_rng(3))
    assert len(ds) == 1500 and set(ds.provenance) == {"specific"}
    np.testing.assert_allclose(np.linalg.norm(ds.directions, axis=1), 1.0, atol=1e-12)
    assert ds.diagnostics["specific_skipped"] == 0


def test_specific_endpoints_from_distinct_strata():
    # generic points: every pair difference has its own direction, so each
    # drawn direction identifies its two endpoints
    z = np.random.default_rng(31).standard_normal((20, 3))
    zd = D.StandardizedData(z, np.zeros(3), np.eye(3))
    ds = specific_directions(zd, 300, make_rng(9))
    stratum = np.empty(20, dtype=int)
    for k, block in enumerate(np.array_split(canonical_order(z), 10)):
        stratum[block] = k
    diffs = z[:, None, :] - z[None, :, :]
    norms = np.linalg.norm(diffs, axis=2)
    np.fill_diagonal(norms, 1.0)
    unit = diffs / norms[:, :, None]
    seen = set()
    for d in ds.directions:
        a, b = np.unravel_index(np.argmax(np.abs(unit @ d)), (20, 20))
        assert abs(abs(unit[a, b] @ d) - 1) < 1e-12
        assert stratum[a] != stratum[b]
        seen.add(frozenset((stratum[a], stratum[b])))
    # all 45 stratum pairs get used with 300 draws
    assert len(seen) == 45


def test_specific_duplicates_are_skipped():
    z = np.zeros((6, 2))
    z[5] = [1.0, 0.0]
    z[:5] = [1.0, 0.0]
    zd = D.StandardizedData(z, np.zeros(2), np.eye(2))
    ds = specific_directions(zd, 10, make_rng(0), max_retries=3)
    assert ds.diagnostics["specific_skipped"] == 10
    assert len(ds) == 0


def test_specific_deterministic(rng):
    zd = standardize(rng.standard_normal((30, 3)))
    a = specific_directions(zd, 50, make_rng(5)).directions
    b = specific_directions(zd, 50, make_rng(5)).directions
    np.testing.assert_array_equal(a, b)


# -- norm-extreme directions --------------------------------------------

def test_norm_extreme_counts():
    assert n_norm_extreme(100, 30) == 50
    assert n_norm_extreme(200, 10) == 50


def test_norm_extreme_example():
    z = np.array([[0.0, 3.0], [1.0, 0.0], [0.0, -4.0], [2.0, 0.0]])
    ds = norm_extreme_directions(D.StandardizedData(z, np.zeros(2), np.eye(2)), 1)
    np.testing.assert_allclose(ds.directions, [[1.0, 0.0], [0.0, -1.0]])
    assert ds.provenance == ["norm-small", "norm-large"]


def test_norm_extreme_permutation_invariant(rng):
    z = rng.standard_normal((40, 3))
    perm = rng.permutation(40)
    mk = lambda a: D.StandardizedData(a, np.zeros(3), np.eye(3))
    a = norm_extreme_directions(mk(z), 10).directions
    b = norm_extreme_directions(mk(z[perm]), 10).directions
    np.testing.assert_array_equal(a, b)


def test_norm_extreme_zero_rows_skipped():
    z = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.0], [0.0, 3.0]])
    ds = norm_extreme_directions(D.StandardizedData(z, np.zeros(2), np.eye(2)), 2)
    assert ds.diagnostics["norm_skipped"] == 1
    assert len(ds) == 3


def test_norm_extreme_range(rng):
    zd = standardize(rng.standard_normal((10, 2)))
    for m in (0, 6):
        with pytest.raises(ParameterError):
            norm_extreme_directions(zd, m)


def test_concat_sums_counts():
    a = DirectionSet(np.eye(2)[:1], ["specific"], {"specific_skipped": 2})
    b = DirectionSet(np.eye(2)[1:], ["norm-small"], {"specific_skipped": 1, "norm_skipped": 4})
    c = DirectionSet.concat(a, b)
    assert len(c) == 2 and c.diagnostics == {"specific_skipped": 3, "norm_skipped": 4}
