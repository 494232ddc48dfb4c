import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import tcadet as t

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def random_hermitian_pd(rng: np.random.Generator, n: int) -> np.ndarray:
    """Well-conditioned random Hermitian positive-definite matrix."""
    x = rng.standard_normal((n, 2 * n)) + 1j * rng.standard_normal((n, 2 * n))
    mat = x @ x.conj().T / (2 * n) + 0.1 * np.eye(n)
    return 0.5 * (mat + mat.conj().T)


def random_covset(rng: np.random.Generator, K: int, T: int, N_R: int) -> t.CovarianceSet:
    grid = t.SamplingGrid.from_band(K, T, N_R, 26e9, 30e9, 0.005)
    mats = np.stack([random_hermitian_pd(rng, N_R) for _ in range(K)])
    return t.factor(t.CovarianceSet(grid=grid, matrices=mats))


def random_signal(rng: np.random.Generator, grid: t.SamplingGrid) -> t.SignalGrid:
    values = (rng.standard_normal((grid.K, grid.T, grid.N_R))
              + 1j * rng.standard_normal((grid.K, grid.T, grid.N_R)))
    return t.SignalGrid(grid=grid, values=values)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


@pytest.fixture(scope="session")
def desk_scenario():
    """The shipped overlay scenario: K=T=5, N_R=4, tight coupling, snr 1.4 dB."""
    grid = t.SamplingGrid.from_band(5, 5, 4, 20e9, 30e9, 0.005)
    covset = t.factor(t.build_synthetic_covariance(grid, t.CouplingPreset.tight()))
    params = t.SignalModelParams(theta_k=0.2, theta_t=0.2, target_snr_db=1.4,
                                 channel=t.ChannelModel.steering())
    signal = t.synthesize_signal(params, grid, covset)
    return grid, covset, params, signal
