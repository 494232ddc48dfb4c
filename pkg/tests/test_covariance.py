import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.constants import c as C_LIGHT

import tcadet as t
from tcadet.errors import (DimensionMismatch, FormatError, NotHermitian,
                           NotPositiveDefinite)

from conftest import random_hermitian_pd


def make_grid(K=4, T=3, N_R=3, f_lo=20e9, f_hi=30e9, spacing=0.005):
    return t.SamplingGrid.from_band(K, T, N_R, f_lo, f_hi, spacing)


class TestSamplingGrid:
    def test_validation(self):
        with pytest.raises(ValueError):
            t.SamplingGrid(K=0, T=1, N_R=1, freqs=np.array([]), spacing=0.01)
        with pytest.raises(ValueError):
            t.SamplingGrid(K=2, T=1, N_R=1, freqs=np.array([2e9, 1e9]), spacing=0.01)
        with pytest.raises(ValueError):
            t.SamplingGrid(K=1, T=1, N_R=1, freqs=np.array([1e9]), spacing=0.0)
        with pytest.raises(ValueError):
            t.SamplingGrid.from_band(3, 1, 1, 2e9, 1e9, 0.01)

    def test_from_band_single_frequency(self):
        grid = t.SamplingGrid.from_band(1, 2, 3, 1e9, 1e9, 0.01)
        np.testing.assert_array_equal(grid.freqs, [1e9])

    def test_immutability(self):
        grid = make_grid()
        covset = t.factor(t.build_synthetic_covariance(grid, t.CouplingPreset.tight()))
        for arr in (grid.freqs, covset.matrices, covset.sqrt, covset.inv):
            with pytest.raises(ValueError):
                arr[0] = 0


class TestSyntheticModel:
    def test_zero_coupling_gives_identity(self):
        grid = make_grid()
        covset = t.build_synthetic_covariance(grid, t.CouplingPreset.custom(0.0, 1.0))
        for k in range(grid.K):
            np.testing.assert_array_equal(covset.matrices[k], np.eye(grid.N_R))

    def test_two_antenna_kernel_entries(self):
        # Direct evaluation of the kernel for N_R = 2: entry (m, n) carries
        # exp(i theta (m - n)) with theta = 2 pi f delta / c, so the (0, 1)
        # entry is rho * exp(-i theta).
        grid = make_grid(K=3, N_R=2)
        sigma2 = 1.7
        covset = t.build_synthetic_covariance(grid, t.CouplingPreset.custom(0.5, sigma2))
        for k, f in enumerate(grid.freqs):
            rho = 0.5 * abs(np.sinc(2 * f * grid.spacing / C_LIGHT))
            theta = 2 * np.pi * f * grid.spacing / C_LIGHT
            expected = sigma2 * np.array([[1.0, rho * np.exp(-1j * theta)],
                                          [rho * np.exp(1j * theta), 1.0]])
            np.testing.assert_allclose(covset.matrices[k], expected, atol=1e-15)

    @given(rho0=st.floats(0.0, 0.95), sigma2=st.floats(0.1, 10.0), N_R=st.integers(1, 6))
    def test_eigenvalues_within_toeplitz_bounds(self, rho0, sigma2, N_R):
        grid = make_grid(K=3, N_R=N_R)
        covset = t.build_synthetic_covariance(grid, t.CouplingPreset.custom(rho0, sigma2))
        for k, f in enumerate(grid.freqs):
            rho = rho0 * abs(np.sinc(2 * f * grid.spacing / C_LIGHT))
            eig = np.linalg.eigvalsh(covset.matrices[k])
            lo = sigma2 * (1 - rho) / (1 + rho) * (1 - 1e-9)
            hi = sigma2 * (1 + rho) / (1 - rho) * (1 + 1e-9)
            assert np.all(eig >= lo) and np.all(eig <= hi)

    @given(rho0=st.floats(0.0, 0.95))
    def test_hermitian_and_positive_definite(self, rho0):
        grid = make_grid()
        covset = t.build_synthetic_covariance(grid, t.CouplingPreset.custom(rho0))
        herm = covset.matrices - covset.matrices.conj().transpose(0, 2, 1)
        assert np.max(np.abs(herm)) < 1e-10
        assert np.all(np.linalg.eigvalsh(covset.matrices)[:, 0] > 0)


class TestFactor:
    def test_identity(self):
        grid = make_grid(N_R=2)
        covset = t.factor(t.build_synthetic_covariance(grid, t.CouplingPreset.custom(0.0)))
        for name in ("sqrt", "inv_sqrt", "inv"):
            np.testing.assert_allclose(getattr(covset, name)[0], np.eye(2), atol=1e-14)

    def test_diagonal_case(self):
        grid = t.SamplingGrid(K=1, T=1, N_R=2, freqs=np.array([1e9]), spacing=0.01)
        covset = t.factor(t.CovarianceSet(grid=grid, matrices=np.diag([4.0, 1.0])[None]))
        np.testing.assert_allclose(covset.sqrt[0], np.diag([2.0, 1.0]), atol=1e-14)
        np.testing.assert_allclose(covset.inv[0], np.diag([0.25, 1.0]), atol=1e-14)
        np.testing.assert_allclose(covset.inv_sqrt[0], np.diag([0.5, 1.0]), atol=1e-14)

    def test_random_reconstruction(self, rng):
        grid = t.SamplingGrid(K=1, T=1, N_R=4, freqs=np.array([1e9]), spacing=0.01)
        mat = random_hermitian_pd(rng, 4)
        covset = t.factor(t.CovarianceSet(grid=grid, matrices=mat[None]))
        scale = np.linalg.norm(mat)
        assert np.linalg.norm(covset.sqrt[0] @ covset.sqrt[0] - mat) / scale < 1e-10
        assert np.linalg.norm(covset.inv[0] @ mat - np.eye(4)) < 1e-8
        assert np.linalg.norm(covset.inv_sqrt[0] @ covset.sqrt[0] - np.eye(4)) < 1e-8

    def test_rejects_eigenvalue_below_cutoff(self):
        grid = t.SamplingGrid(K=1, T=1, N_R=2, freqs=np.array([1e9]), spacing=0.01)
        with pytest.raises(NotPositiveDefinite):
            t.CovarianceSet(grid=grid, matrices=np.diag([1.0, 1e-14])[None])

    def test_require_factors(self):
        grid = make_grid()
        covset = t.build_synthetic_covariance(grid, t.CouplingPreset.tight())
        assert not covset.is_factored
        with pytest.raises(ValueError):
            covset.require_factors()


class TestFileRoundTrip:
    def test_save_load_exact(self, rng, tmp_path):
        grid = make_grid(K=3, N_R=3)
        covset = t.build_synthetic_covariance(grid, t.CouplingPreset.tight())
        path = tmp_path / "cov.txt"
        t.save_covariance(covset, path)
        loaded = t.load_covariance(grid, path)
        assert np.max(np.abs(loaded.matrices - covset.matrices)) < 1e-12

    def test_wrong_block_count_is_dimension_mismatch(self, tmp_path):
        grid = make_grid(K=3, N_R=2)
        path = tmp_path / "cov.txt"
        # header declares K-1 matrices relative to the grid
        path.write_text("2 2\n1+0j 0+0j\n0+0j 1+0j\n1+0j 0+0j\n0+0j 1+0j\n")
        with pytest.raises(DimensionMismatch):
            t.load_covariance(grid, path)

    def test_non_hermitian_entry_rejected(self, tmp_path):
        grid = make_grid(K=1, N_R=2)
        path = tmp_path / "cov.txt"
        path.write_text("1 2\n1+0j 0.5+0.5j\n0.5+0.5j 1+0j\n")
        with pytest.raises(NotHermitian):
            t.load_covariance(grid, path)

    def test_malformed_file_is_format_error(self, tmp_path):
        grid = make_grid(K=1, N_R=2)
        bad_header = tmp_path / "a.txt"
        bad_header.write_text("banana\n")
        truncated = tmp_path / "b.txt"
        truncated.write_text("1 2\n1+0j 0+0j\n")
        bad_token = tmp_path / "c.txt"
        bad_token.write_text("1 2\n1+0j zebra\n0+0j 1+0j\n")
        for path in (bad_header, truncated, bad_token):
            with pytest.raises(FormatError):
                t.load_covariance(grid, path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FormatError):
            t.load_covariance(make_grid(), tmp_path / "nope.txt")

    def test_not_positive_definite_file(self, tmp_path):
        grid = make_grid(K=1, N_R=2)
        path = tmp_path / "cov.txt"
        path.write_text("1 2\n1+0j 2+0j\n2+0j 1+0j\n")
        with pytest.raises(NotPositiveDefinite):
            t.load_covariance(grid, path)
