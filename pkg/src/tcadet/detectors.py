"""The four scalar test statistics computed from a received sample grid.

* moving-average (MA) statistic: quadratic form built from a sliding uniform
  frequency window, for signals that vary slowly across frequency;
* constant-regime statistic: coherent sum across frequency, whitened by the
  pooled inverse S = (sum_k R_k^{-1})^{-1};
* rapid-regime statistic: noise-whitened energy summed over frequency and
  time (an energy detector extended to frequency-varying correlated noise);
* upper-bound statistic: matched filter with the signal assumed known.

Statistics are pure functions of immutable inputs and return the real part of
the underlying quadratic/linear form; the imaginary residue is available for
numerical-health diagnostics.  Thresholding lives in the experiments layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .covariance import CovarianceSet
from .errors import DimensionMismatch, InvalidWindow
from .signalmodel import SignalGrid


class DetectorKind(Enum):
    MA = "ma"
    CONSTANT = "constant"
    RAPID = "rapid"
    UPPER = "upper"


@dataclass(frozen=True, eq=False)
class MaWeights:
    """Uniform moving-average weight table.

    ``table[k, L + ell]`` is the weight w[k, ell] for 0-based frequency index
    k and window offset ell in [-L, L]; entries are zero wherever k - ell
    falls outside the frequency range.  Every row sums to one.
    """

    K: int
    L: int
    table: np.ndarray = field(repr=False)  # (K, 2L+1)

    def weight(self, k: int, ell: int) -> float:
        """w[k, ell] with zeros outside the window and outside the band edges."""
        if abs(ell) > self.L or not 0 <= k - ell < self.K:
            return 0.0
        return float(self.table[k, self.L + ell])


def ma_weights(K: int, L: int) -> MaWeights:
    """Build the uniform window weights for K frequency samples and half-width L.

    L must be even and non-negative with window 2L+1 no wider than K.
    Interior rows use 1/(2L+1); rows within L of either band edge shrink the
    window to stay inside [0, K) and renormalize so the row still sums to one.
    """
    if not isinstance(L, (int, np.integer)) or L < 0:
        raise InvalidWindow(f"L must be a non-negative integer, got {L!r}")
    if L % 2 != 0:
        raise InvalidWindow(f"L must be even, got {L}")
    if 2 * L + 1 > K:
        raise InvalidWindow(f"window 2L+1 = {2 * L + 1} exceeds K = {K}")
    table = np.zeros((K, 2 * L + 1))
    for k in range(K):
        if k <= L - 1:
            value = 1.0 / (k + 1 + L)
        elif k >= K - L:
            value = 1.0 / (K - k + L)
        else:
            value = 1.0 / (2 * L + 1)
        for ell in range(-L, L + 1):
            if 0 <= k - ell < K:
                table[k, L + ell] = value
    table.flags.writeable = False
    return MaWeights(K=K, L=L, table=table)


@dataclass(frozen=True, eq=False)
class MaOperator:
    """Banded Hermitian block operator of the MA quadratic form.

    ``blocks[r, 2L + d]`` holds the N_R x N_R block coupling frequency r to
    frequency r + d; blocks vanish identically for |d| > 2L, so only the band
    is stored.  ``dense()`` assembles the full K*N_R square matrix for
    desk-scale eigenanalysis and oracle checks.
    """

    K: int
    N_R: int
    L: int
    blocks: np.ndarray = field(repr=False)  # (K, 4L+1, N_R, N_R)

    def block(self, r: int, s: int) -> np.ndarray:
        d = s - r
        if abs(d) > 2 * self.L:
            return np.zeros((self.N_R, self.N_R), dtype=complex)
        return self.blocks[r, 2 * self.L + d]

    def dense(self) -> np.ndarray:
        K, N = self.K, self.N_R
        out = np.zeros((K * N, K * N), dtype=complex)
        for r in range(K):
            for s in range(max(0, r - 2 * self.L), min(K, r + 2 * self.L + 1)):
                out[r * N:(r + 1) * N, s * N:(s + 1) * N] = self.block(r, s)
        return out

    def hermitian_defect(self) -> float:
        """max |A_rs - A_sr^H| over the stored band."""
        worst = 0.0
        for r in range(self.K):
            for s in range(max(0, r - 2 * self.L), min(self.K, r + 2 * self.L + 1)):
                worst = max(worst, float(np.max(np.abs(self.block(r, s) - self.block(s, r).conj().T))))
        return worst


def build_ma_operator(weights: MaWeights, covset: CovarianceSet) -> MaOperator:
    """Assemble the banded blocks of the MA quadratic form.

    Block (r, s) combines the two window-weighted whitening terms with a
    correction summing w[k, k-r] R_k^{-1} w[k, k-s] over the frequencies k
    whose windows cover both r and s; the result is Hermitian and exactly
    zero beyond |r - s| = 2L.
    """
    covset.require_factors()
    K, N, L = weights.K, covset.grid.N_R, weights.L
    if covset.grid.K != K:
        raise DimensionMismatch(f"weights built for K={K}, covariance set has K={covset.grid.K}")
    inv = covset.inv
    blocks = np.zeros((K, 4 * L + 1, N, N), dtype=complex)
    for r in range(K):
        for s in range(max(0, r - 2 * L), min(K, r + 2 * L + 1)):
            acc = inv[r] * weights.weight(r, r - s) + weights.weight(s, s - r) * inv[s]
            for k in range(max(max(r, s) - L, 0), min(min(r, s) + L + 1, K)):
                acc = acc - weights.weight(k, k - r) * weights.weight(k, k - s) * inv[k]
            blocks[r, 2 * L + (s - r)] = acc
    blocks.flags.writeable = False
    return MaOperator(K=K, N_R=N, L=L, blocks=blocks)


def _ma_form(op: MaOperator, values: np.ndarray) -> np.ndarray:
    """Complex MA quadratic form, blockwise over the band; values (..., K, T, N_R)."""
    K, L = op.K, op.L
    acc = np.zeros(values.shape[:-3], dtype=complex)
    for d in range(-2 * L, 2 * L + 1):
        r0, r1 = max(0, -d), min(K, K - d)
        if r0 >= r1:
            continue
        left = values[..., r0:r1, :, :].conj()
        right = values[..., r0 + d:r1 + d, :, :]
        acc = acc + np.einsum("...kti,kij,...ktj->...", left, op.blocks[r0:r1, 2 * L + d], right)
    return acc


def _constant_form(spec: "DetectorSpec", values: np.ndarray) -> np.ndarray:
    pooled = np.einsum("kij,...ktj->...ti", spec.covset.inv, values)
    return np.einsum("...ti,ij,...tj->...", pooled.conj(), spec.pooled_inverse, pooled)


def _rapid_form(covset: CovarianceSet, values: np.ndarray) -> np.ndarray:
    return np.einsum("...kti,kij,...ktj->...", values.conj(), covset.inv, values)


def _upper_form(covset: CovarianceSet, known: np.ndarray, values: np.ndarray) -> np.ndarray:
    return np.einsum("kti,kij,...ktj->...", known.conj(), covset.inv, values)


def _as_value(acc: np.ndarray, return_residual: bool):
    value = float(acc.real)
    if return_residual:
        return value, abs(float(acc.imag))
    return value


def stat_ma(v: SignalGrid, op: MaOperator, return_residual: bool = False):
    """MA statistic: sum over time of the banded quadratic form on the stacked samples."""
    if v.grid.K != op.K or v.grid.N_R != op.N_R:
        raise DimensionMismatch(
            f"operator built for (K={op.K}, N_R={op.N_R}), samples have (K={v.grid.K}, N_R={v.grid.N_R})")
    return _as_value(_ma_form(op, v.values), return_residual)


def stat_constant(v: SignalGrid, spec: "DetectorSpec", return_residual: bool = False):
    """Constant-regime statistic: per-time coherent frequency sums whitened by S."""
    if spec.kind is not DetectorKind.CONSTANT:
        raise ValueError(f"expected a constant-regime detector spec, got {spec.kind}")
    return _as_value(_constant_form(spec, v.values), return_residual)


def stat_rapid(v: SignalGrid, covset: CovarianceSet, return_residual: bool = False):
    """Rapid-regime statistic: whitened energy summed over frequency and time."""
    covset.require_factors()
    return _as_value(_rapid_form(covset, v.values), return_residual)


def stat_upper(v: SignalGrid, covset: CovarianceSet, known_signal: SignalGrid) -> float:
    """Upper-bound statistic: real part of the known-signal matched filter output."""
    covset.require_factors()
    if known_signal.values.shape != v.values.shape:
        raise DimensionMismatch(
            f"known signal shape {known_signal.values.shape} does not match samples {v.values.shape}")
    return float(_upper_form(covset, known_signal.values, v.values).real)


@dataclass(frozen=True, eq=False)
class DetectorSpec:
    """A detector choice plus its scenario-specific precomputation.

    MA carries the banded operator, the constant regime carries the pooled
    inverse S, and the upper bound carries the signal it is matched to.
    """

    kind: DetectorKind
    covset: CovarianceSet
    L: Optional[int] = None
    ma_operator: Optional[MaOperator] = field(default=None, repr=False)
    pooled_inverse: Optional[np.ndarray] = field(default=None, repr=False)
    known_signal: Optional[SignalGrid] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind is DetectorKind.MA and (self.ma_operator is None or self.L is None):
            raise ValueError("MA detector spec requires L and the banded operator")
        if self.kind is DetectorKind.CONSTANT and self.pooled_inverse is None:
            raise ValueError("constant detector spec requires the pooled inverse S")
        if self.kind is DetectorKind.UPPER and self.known_signal is None:
            raise ValueError("upper-bound detector spec requires the known signal")

    @property
    def label(self) -> str:
        if self.kind is DetectorKind.MA:
            return f"ma_L{self.L}"
        return self.kind.value


def ma_detector(covset: CovarianceSet, L: int) -> DetectorSpec:
    weights = ma_weights(covset.grid.K, L)
    op = build_ma_operator(weights, covset)
    return DetectorSpec(kind=DetectorKind.MA, covset=covset, L=L, ma_operator=op)


def constant_detector(covset: CovarianceSet) -> DetectorSpec:
    covset.require_factors()
    pooled = np.linalg.inv(covset.inv.sum(axis=0))
    pooled = 0.5 * (pooled + pooled.conj().T)
    return DetectorSpec(kind=DetectorKind.CONSTANT, covset=covset, pooled_inverse=pooled)


def rapid_detector(covset: CovarianceSet) -> DetectorSpec:
    covset.require_factors()
    return DetectorSpec(kind=DetectorKind.RAPID, covset=covset)


def upper_detector(covset: CovarianceSet, known_signal: SignalGrid) -> DetectorSpec:
    covset.require_factors()
    return DetectorSpec(kind=DetectorKind.UPPER, covset=covset, known_signal=known_signal)


@dataclass(frozen=True)
class DetectorRequest:
    """Detector choice before scenario binding; MA carries its half-width L."""

    kind: DetectorKind
    L: Optional[int] = None

    def __post_init__(self):
        if self.kind is DetectorKind.MA and self.L is None:
            raise ValueError("MA detector request requires L")


def build_detector(request: DetectorRequest, covset: CovarianceSet,
                   known_signal: Optional[SignalGrid] = None) -> DetectorSpec:
    if request.kind is DetectorKind.MA:
        return ma_detector(covset, request.L)
    if request.kind is DetectorKind.CONSTANT:
        return constant_detector(covset)
    if request.kind is DetectorKind.RAPID:
        return rapid_detector(covset)
    if known_signal is None:
        raise ValueError("upper-bound detector requires the known signal grid")
    return upper_detector(covset, known_signal)


def statistic(spec: DetectorSpec, v: SignalGrid) -> float:
    """Evaluate the statistic selected by a detector spec."""
    if spec.kind is DetectorKind.MA:
        return stat_ma(v, spec.ma_operator)
    if spec.kind is DetectorKind.CONSTANT:
        return stat_constant(v, spec)
    if spec.kind is DetectorKind.RAPID:
        return stat_rapid(v, spec.covset)
    return stat_upper(v, spec.covset, spec.known_signal)


def statistic_batch(spec: DetectorSpec, values: np.ndarray) -> np.ndarray:
    """Vectorized statistics for a batch of sample grids, shape (B, K, T, N_R)."""
    if spec.kind is DetectorKind.MA:
        return _ma_form(spec.ma_operator, values).real
    if spec.kind is DetectorKind.CONSTANT:
        return _constant_form(spec, values).real
    if spec.kind is DetectorKind.RAPID:
        return _rapid_form(spec.covset, values).real
    return _upper_form(spec.covset, spec.known_signal.values, values).real
