"""Frequency-indexed noise covariance matrices: synthesis, file ingestion, spectral factors.

Each frequency sample k carries an N_R x N_R Hermitian positive-definite
matrix R_k describing the coupled-antenna noise at that frequency.  The
detectors and the distribution analysis need R_k^{1/2}, R_k^{-1/2} and
R_k^{-1}; those are cached here after an explicit factorization step.
Block-diagonal operators built from the R_k are never materialized densely,
all products are performed blockwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.constants import c as C_LIGHT

from .errors import DimensionMismatch, FormatError, NotHermitian, NotPositiveDefinite
from .grids import SamplingGrid

# Per-entry absolute Hermitian tolerance and the relative eigenvalue cutoff
# below which a matrix is rejected rather than clamped (clamping would corrupt
# the inverse-based statistics).
HERMITIAN_ATOL = 1e-10
EPS_PD_FACTOR = 1e-12


class CouplingKind(Enum):
    TIGHT = "tight"
    WEAK = "weak"
    CUSTOM = "custom"


@dataclass(frozen=True)
class CouplingPreset:
    """Synthetic coupling model: base strength rho0 in [0, 1) and noise power per antenna."""

    kind: CouplingKind
    coupling_scale: float
    noise_power: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.coupling_scale < 1.0:
            raise ValueError(f"coupling_scale must lie in [0, 1), got {self.coupling_scale}")
        if self.noise_power <= 0.0:
            raise ValueError(f"noise_power must be positive, got {self.noise_power}")

    @classmethod
    def tight(cls, noise_power: float = 1.0) -> "CouplingPreset":
        return cls(CouplingKind.TIGHT, 0.9, noise_power)

    @classmethod
    def weak(cls, noise_power: float = 1.0) -> "CouplingPreset":
        return cls(CouplingKind.WEAK, 0.3, noise_power)

    @classmethod
    def custom(cls, coupling_scale: float, noise_power: float = 1.0) -> "CouplingPreset":
        return cls(CouplingKind.CUSTOM, coupling_scale, noise_power)


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class CovarianceSet:
    """The K noise covariance matrices plus (optionally) their cached spectral factors.

    Immutable after construction; safe to share across worker processes.
    """

    grid: SamplingGrid
    matrices: np.ndarray = field(repr=False)  # (K, N_R, N_R) complex
    sqrt: Optional[np.ndarray] = field(default=None, repr=False)
    inv_sqrt: Optional[np.ndarray] = field(default=None, repr=False)
    inv: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        mats = np.ascontiguousarray(np.asarray(self.matrices, dtype=complex))
        K, N = self.grid.K, self.grid.N_R
        if mats.shape != (K, N, N):
            raise DimensionMismatch(
                f"expected {K} matrices of shape {N}x{N}, got array of shape {mats.shape}")
        defect = np.max(np.abs(mats - mats.conj().transpose(0, 2, 1)))
        if defect >= HERMITIAN_ATOL:
            raise NotHermitian(f"max |R - R^H| entry is {defect:.3e} (tolerance {HERMITIAN_ATOL})")
        eigval = np.linalg.eigvalsh(mats)
        cutoff = self.eps_pd()
        worst = eigval[:, 0] - cutoff
        if np.any(worst <= 0):
            k = int(np.argmin(worst))
            raise NotPositiveDefinite(
                f"R_{k} has eigenvalue {eigval[k, 0]:.6e} at or below cutoff {cutoff[k]:.3e}")
        object.__setattr__(self, "matrices", _freeze(mats))
        for name in ("sqrt", "inv_sqrt", "inv"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.ascontiguousarray(np.asarray(arr, dtype=complex))
                if arr.shape != (K, N, N):
                    raise DimensionMismatch(f"factor {name} has shape {arr.shape}")
                object.__setattr__(self, name, _freeze(arr))

    def eps_pd(self) -> np.ndarray:
        """Per-matrix eigenvalue rejection cutoff: 1e-12 times the largest diagonal entry."""
        diag = np.diagonal(self.matrices, axis1=1, axis2=2).real
        return EPS_PD_FACTOR * diag.max(axis=1)

    @property
    def is_factored(self) -> bool:
        return self.inv is not None

    def require_factors(self) -> "CovarianceSet":
        if not self.is_factored:
            raise ValueError("covariance set is not factored; call factor() first")
        return self


def build_synthetic_covariance(grid: SamplingGrid, preset: CouplingPreset) -> CovarianceSet:
    """Frequency-dependent exponential-Toeplitz proxy covariance.

    (R_k)_{mn} = sigma^2 * rho_k^{|m-n|} * exp(i 2 pi f_k d (m-n) / c) with
    rho_k = rho0 * |sinc(2 f_k d / c)|, so the coupling strength varies across
    the band and vanishes where the sinc profile crosses zero.  Positive
    definiteness holds for every rho_k < 1.
    """
    sigma2 = preset.noise_power
    rho = preset.coupling_scale * np.abs(np.sinc(2.0 * grid.freqs * grid.spacing / C_LIGHT))
    theta = 2.0 * np.pi * grid.freqs * grid.spacing / C_LIGHT
    m = np.arange(grid.N_R)
    dm = m[:, None] - m[None, :]  # (N, N), m - n
    mats = np.empty((grid.K, grid.N_R, grid.N_R), dtype=complex)
    for k in range(grid.K):
        mats[k] = sigma2 * rho[k] ** np.abs(dm) * np.exp(1j * theta[k] * dm)
    return CovarianceSet(grid=grid, matrices=mats)


def factor(covset: CovarianceSet) -> CovarianceSet:
    """Return a copy with R_k^{1/2}, R_k^{-1/2} and R_k^{-1} cached.

    Uses the Hermitian eigendecomposition R_k = U diag(w) U^H; eigenvalues at
    or below the rejection cutoff raise NotPositiveDefinite.
    """
    K, N = covset.grid.K, covset.grid.N_R
    cutoff = covset.eps_pd()
    sqrt = np.empty((K, N, N), dtype=complex)
    inv_sqrt = np.empty_like(sqrt)
    inv = np.empty_like(sqrt)
    for k in range(K):
        w, u = np.linalg.eigh(covset.matrices[k])
        if w[0] <= cutoff[k]:
            raise NotPositiveDefinite(
                f"R_{k} has eigenvalue {w[0]:.6e} at or below cutoff {cutoff[k]:.3e}")
        for out, ww in ((sqrt, np.sqrt(w)), (inv_sqrt, 1.0 / np.sqrt(w)), (inv, 1.0 / w)):
            mat = (u * ww) @ u.conj().T
            out[k] = 0.5 * (mat + mat.conj().T)
    return replace(covset, sqrt=sqrt, inv_sqrt=inv_sqrt, inv=inv)


def _format_complex(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}j"


def save_covariance(covset: CovarianceSet, path) -> None:
    """Write the documented text format: header ``K N_R`` then K row-major blocks."""
    K, N = covset.grid.K, covset.grid.N_R
    lines = [f"{K} {N}"]
    for k in range(K):
        for i in range(N):
            lines.append(" ".join(_format_complex(covset.matrices[k, i, j]) for j in range(N)))
    Path(path).write_text("\n".join(lines) + "\n")


def parse_complex_block_file(path, what: str, matrix_blocks: bool) -> tuple[int, int, np.ndarray]:
    """Parse ``header: K N`` followed by lines of N complex entries each.

    Covariance files carry N lines per frequency (matrix_blocks=True), channel
    files carry one.  Returns (K, N, values) with values shaped (n_lines, N).
    Raises FormatError on anything that does not follow the documented layout.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {what} file {path}: {exc}") from exc
    rows = [line.split() for line in text.splitlines() if line.strip()]
    if not rows or len(rows[0]) != 2:
        raise FormatError(f"{what} file {path}: first line must be 'K N'")
    try:
        K, N = int(rows[0][0]), int(rows[0][1])
    except ValueError as exc:
        raise FormatError(f"{what} file {path}: malformed header {rows[0]!r}") from exc
    if K < 1 or N < 1:
        raise FormatError(f"{what} file {path}: header dimensions must be positive")
    expected = K * N if matrix_blocks else K
    body = rows[1:]
    if len(body) != expected:
        raise FormatError(
            f"{what} file {path}: expected {expected} data lines for the header, found {len(body)}")
    values = np.empty((expected, N), dtype=complex)
    for i, row in enumerate(body):
        if len(row) != N:
            raise FormatError(f"{what} file {path}: line {i + 2} has {len(row)} entries, expected {N}")
        try:
            values[i] = [complex(tok) for tok in row]
        except ValueError as exc:
            raise FormatError(f"{what} file {path}: line {i + 2}: {exc}") from exc
    return K, N, values


def load_covariance(grid: SamplingGrid, source) -> CovarianceSet:
    """Load covariance matrices from the documented text format and validate all invariants."""
    K, N, values = parse_complex_block_file(source, "covariance", matrix_blocks=True)
    if K != grid.K or N != grid.N_R:
        raise DimensionMismatch(
            f"covariance file {source} holds K={K}, N_R={N}; grid expects K={grid.K}, N_R={grid.N_R}")
    return CovarianceSet(grid=grid, matrices=values.reshape(K, N, N))
