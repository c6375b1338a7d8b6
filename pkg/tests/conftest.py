import numpy as np
import pytest

from ksdrobust.datagen import ContaminationConfig, derive_seed, generate_sample


def point_mass_sample(rep, n=100, p=30, eps=0.2, K=13.0, gamma=0.0, base=11):
    cfg = ContaminationConfig(n, p, eps, K, gamma, derive_seed(base, rep), spread="all")
    return generate_sample(cfg)


def random_rotation(p, rng):
    q, r = np.linalg.qr(rng.standard_normal((p, p)))
    return q * np.sign(np.diag(r))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
