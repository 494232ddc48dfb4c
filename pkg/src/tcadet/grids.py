"""Sampling grid shared by every module: frequency, time, and antenna dimensions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class SamplingGrid:
    """Joint frequency/time sampling layout of the receiver.

    K frequency samples at physical frequencies ``freqs`` (Hz, strictly
    increasing), T time samples, N_R antennas spaced ``spacing`` meters apart.
    """

    K: int
    T: int
    N_R: int
    freqs: np.ndarray = field(repr=False)
    spacing: float = 0.0

    def __post_init__(self):
        for name in ("K", "T", "N_R"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        freqs = np.asarray(self.freqs, dtype=float)
        if freqs.shape != (self.K,):
            raise ValueError(f"freqs must have shape ({self.K},), got {freqs.shape}")
        if self.K > 1 and not np.all(np.diff(freqs) > 0):
            raise ValueError("freqs must be strictly increasing")
        if self.spacing <= 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        freqs.flags.writeable = False
        object.__setattr__(self, "freqs", freqs)

    @classmethod
    def from_band(cls, K: int, T: int, N_R: int, f_min_hz: float, f_max_hz: float,
                  spacing_m: float) -> "SamplingGrid":
        """Grid with K frequencies spread evenly over [f_min_hz, f_max_hz]."""
        if K > 1 and not f_max_hz > f_min_hz:
            raise ValueError("f_max_hz must exceed f_min_hz for K > 1")
        freqs = np.linspace(f_min_hz, f_max_hz, K)
        return cls(K=K, T=T, N_R=N_R, freqs=freqs, spacing=spacing_m)
