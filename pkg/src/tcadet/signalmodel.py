"""Unknown-signal synthesis, SNR calibration, and received-sample generation.

The simulated signal on frequency sample k and time sample t is
``alpha[k, t] = h_k * g * exp(i (k-1) theta_k) * exp(i (t-1) theta_t)`` with a
time-constant per-frequency channel h_k and a real gain g calibrated so the
average per-frequency SNR hits a requested dB target.

Gaussian convention used throughout the package: a "standard" complex vector
has independent real and imaginary parts that are each unit-variance normal,
so E[|entry|^2] = 2 and sampled noise has E[n n^H] = 2 R_k.  This is the one
convention under which the exact chi-square distribution results hold without
stray factors of 2; the Monte Carlo suite validates it end to end.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.constants import c as C_LIGHT

from .covariance import CovarianceSet, parse_complex_block_file
from .errors import DimensionMismatch
from .grids import SamplingGrid


class ChannelKind(Enum):
    END_FIRE_STEERING = "end_fire_steering"
    FROM_FILE = "from_file"


@dataclass(frozen=True, eq=False)
class ChannelModel:
    """Target-to-receiver channel: ideal plane-wave steering or vectors from a file."""

    kind: ChannelKind
    direction_cos: float = 1.0
    vectors: Optional[np.ndarray] = field(default=None, repr=False)  # (K, N_R) when FROM_FILE

    def __post_init__(self):
        if self.kind is ChannelKind.END_FIRE_STEERING:
            if not -1.0 <= self.direction_cos <= 1.0:
                raise ValueError(f"direction_cos must lie in [-1, 1], got {self.direction_cos}")
        elif self.vectors is None:
            raise ValueError("FROM_FILE channel model requires vectors")
        if self.vectors is not None:
            arr = np.asarray(self.vectors, dtype=complex)
            arr.flags.writeable = False
            object.__setattr__(self, "vectors", arr)

    @classmethod
    def steering(cls, direction_cos: float = 1.0) -> "ChannelModel":
        """Plane-wave steering channel; the end-fire default is direction_cos = 1."""
        return cls(ChannelKind.END_FIRE_STEERING, direction_cos=direction_cos)

    @classmethod
    def from_file(cls, path) -> "ChannelModel":
        _, _, values = parse_complex_block_file(path, "channel", matrix_blocks=False)
        return cls(ChannelKind.FROM_FILE, vectors=values)


@dataclass(frozen=True)
class SignalModelParams:
    """Phase rates per frequency/time step, target average SNR, and the channel."""

    theta_k: float
    theta_t: float
    target_snr_db: float
    channel: ChannelModel

    def __post_init__(self):
        if not np.isfinite(self.target_snr_db):
            raise ValueError(f"target_snr_db must be finite, got {self.target_snr_db}")


@dataclass(frozen=True, eq=False)
class SignalGrid:
    """Complex N_R-vectors on the (K, T) sampling grid; also holds received samples."""

    grid: SamplingGrid
    values: np.ndarray = field(repr=False)  # (K, T, N_R) complex

    def __post_init__(self):
        values = np.ascontiguousarray(np.asarray(self.values, dtype=complex))
        expected = (self.grid.K, self.grid.T, self.grid.N_R)
        if values.shape != expected:
            raise DimensionMismatch(f"signal values must have shape {expected}, got {values.shape}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def stacked(self) -> np.ndarray:
        """Frequency-major flattening per time index: shape (T, K*N_R)."""
        return self.values.transpose(1, 0, 2).reshape(self.grid.T, -1)


def make_channel(grid: SamplingGrid, model: ChannelModel) -> np.ndarray:
    """Per-frequency channel vectors h_k, shape (K, N_R), constant in time."""
    if model.kind is ChannelKind.END_FIRE_STEERING:
        antennas = np.arange(grid.N_R)
        phase = -2j * np.pi * np.outer(grid.freqs, antennas) * grid.spacing * model.direction_cos / C_LIGHT
        return np.exp(phase)
    vectors = model.vectors
    if vectors.shape != (grid.K, grid.N_R):
        raise DimensionMismatch(
            f"channel vectors have shape {vectors.shape}; grid expects ({grid.K}, {grid.N_R})")
    return np.array(vectors)


def calibrate_gain(h: np.ndarray, covset: CovarianceSet, target_snr_db: float) -> float:
    """Real gain g > 0 hitting the target average SNR across frequency.

    The average per-frequency SNR is (1/K) * sum_k g^2 ||h_k||^2 / tr(R_k),
    evaluated at a single time sample.
    """
    traces = np.trace(covset.matrices, axis1=1, axis2=2).real
    per_unit_gain = np.mean(np.sum(np.abs(h) ** 2, axis=1) / traces)
    target = 10.0 ** (target_snr_db / 10.0)
    return float(np.sqrt(target / per_unit_gain))


def measured_snr_db(signal: SignalGrid, covset: CovarianceSet) -> float:
    """Average per-frequency SNR realized by a signal grid, in dB (t-invariant)."""
    traces = np.trace(covset.matrices, axis1=1, axis2=2).real
    power = np.sum(np.abs(signal.values[:, 0, :]) ** 2, axis=1)
    return float(10.0 * np.log10(np.mean(power / traces)))


def synthesize_signal(params: SignalModelParams, grid: SamplingGrid,
                      covset: CovarianceSet) -> SignalGrid:
    """Deterministic signal grid with the configured phase rates and calibrated gain."""
    h = make_channel(grid, params.channel)
    g = calibrate_gain(h, covset, params.target_snr_db)
    phase_k = np.exp(1j * params.theta_k * np.arange(grid.K))
    phase_t = np.exp(1j * params.theta_t * np.arange(grid.T))
    values = g * h[:, None, :] * phase_k[:, None, None] * phase_t[None, :, None]
    return SignalGrid(grid=grid, values=values)


def sample_observation(signal: Optional[SignalGrid], covset: CovarianceSet,
                       rng: np.random.Generator) -> SignalGrid:
    """One received grid: colored noise, plus the signal when present.

    Noise is R_k^{1/2} v~ with v~ entries having independent unit-variance real
    and imaginary parts, independent across frequency and time.
    """
    covset.require_factors()
    grid = covset.grid
    white = rng.standard_normal((grid.K, grid.T, grid.N_R, 2))
    colored = np.einsum("kij,ktj->kti", covset.sqrt, white[..., 0] + 1j * white[..., 1])
    if signal is not None:
        if signal.values.shape != colored.shape:
            raise DimensionMismatch(
                f"signal shape {signal.values.shape} does not match grid {colored.shape}")
        colored = colored + signal.values
    return SignalGrid(grid=grid, values=colored)
