"""Monte Carlo estimation of statistic distributions, P_D and P_FA.

Every trial owns a counter-based RNG stream keyed by (master_seed,
trial_index), so results are bit-identical regardless of how trials are
scheduled across workers.  Trials are embarrassingly parallel; chunks are
merged in trial order before sorting.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .covariance import CovarianceSet
from .detectors import DetectorSpec, statistic_batch
from .signalmodel import SignalGrid

_TRIAL_BATCH = 512


class Hypothesis(Enum):
    H0 = "h0"
    H1 = "h1"


@dataclass(frozen=True, eq=False)
class TrialPlan:
    """Everything needed to reproduce a batch of detector-statistic draws."""

    n_trials: int
    master_seed: int
    hypothesis: Hypothesis
    detector: DetectorSpec
    covset: CovarianceSet
    signal: Optional[SignalGrid] = field(default=None, repr=False)

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError(f"n_trials must be at least 1, got {self.n_trials}")
        if self.hypothesis is Hypothesis.H1 and self.signal is None:
            raise ValueError("H1 trials require a signal grid")
        self.covset.require_factors()


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Independent stream for one trial: Philox keyed by the seed, counter block by index."""
    return np.random.Generator(np.random.Philox(counter=trial_index << 128, key=master_seed))


@dataclass(eq=False)
class EmpiricalDistribution:
    """Sorted statistic samples with an exact right-continuous ECDF."""

    samples: np.ndarray  # sorted ascending

    @classmethod
    def from_samples(cls, raw: np.ndarray) -> "EmpiricalDistribution":
        return cls(samples=np.sort(np.asarray(raw, dtype=float)))

    def ecdf(self, x) -> np.ndarray:
        return np.searchsorted(self.samples, np.asarray(x, dtype=float), side="right") / len(self.samples)

    def mean(self) -> float:
        return float(self.samples.mean())

    def variance(self) -> float:
        return float(self.samples.var(ddof=1))

    def quantile(self, q) -> np.ndarray:
        return np.quantile(self.samples, q)


def _run_chunk(plan: TrialPlan, start: int, stop: int) -> np.ndarray:
    grid = plan.covset.grid
    shape = (grid.K, grid.T, grid.N_R)
    out = np.empty(stop - start)
    alpha = plan.signal.values if plan.hypothesis is Hypothesis.H1 else None
    for base in range(start, stop, _TRIAL_BATCH):
        top = min(base + _TRIAL_BATCH, stop)
        white = np.empty((top - base, *shape), dtype=complex)
        for i in range(base, top):
            draw = trial_rng(plan.master_seed, i).standard_normal((*shape, 2))
            white[i - base] = draw[..., 0] + 1j * draw[..., 1]
        observed = np.einsum("kij,bktj->bkti", plan.covset.sqrt, white)
        if alpha is not None:
            observed += alpha
        out[base - start:top - start] = statistic_batch(plan.detector, observed)
    return out


def run_trials(plan: TrialPlan, n_workers: int = 1) -> EmpiricalDistribution:
    """Draw n_trials independent statistics; deterministic for a given master seed."""
    n = plan.n_trials
    if n_workers <= 1 or n < 4 * n_workers:
        samples = _run_chunk(plan, 0, n)
    else:
        bounds = np.linspace(0, n, n_workers + 1, dtype=int)
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(_run_chunk, [plan] * n_workers, bounds[:-1], bounds[1:]))
        samples = np.concatenate(parts)
    return EmpiricalDistribution.from_samples(samples)


def ks_distance(emp: EmpiricalDistribution, analytic_cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Two-sided Kolmogorov-Smirnov distance between the ECDF and a CDF callable.

    The lower step of the ECDF is compared against the CDF's left limit, so a
    step-function CDF aligned with the ECDF (for example the ECDF itself)
    gives exactly zero.
    """
    samples = emp.samples
    n = len(samples)
    cdf = np.asarray(analytic_cdf(samples), dtype=float)
    cdf_left = np.asarray(analytic_cdf(np.nextafter(samples, -np.inf)), dtype=float)
    steps_hi = np.arange(1, n + 1) / n
    steps_lo = np.arange(0, n) / n
    return float(max(np.max(np.abs(steps_hi - cdf)), np.max(np.abs(cdf_left - steps_lo))))


@dataclass(frozen=True)
class PdPfaEstimate:
    pfa: float
    pd: float
    pfa_stderr: float
    pd_stderr: float


def estimate_pd_pfa(h0: EmpiricalDistribution, h1: EmpiricalDistribution,
                    threshold: float) -> PdPfaEstimate:
    """Exceedance fractions above a threshold with binomial standard errors."""
    def tail(emp: EmpiricalDistribution) -> tuple[float, float]:
        n = len(emp.samples)
        p = float(np.count_nonzero(emp.samples > threshold)) / n
        return p, float(np.sqrt(p * (1.0 - p) / n))

    pfa, pfa_se = tail(h0)
    pd, pd_se = tail(h1)
    return PdPfaEstimate(pfa=pfa, pd=pd, pfa_stderr=pfa_se, pd_stderr=pd_se)


def save_samples(emp: EmpiricalDistribution, path) -> None:
    """Raw statistic samples as a one-column CSV."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["statistic"])
        for value in emp.samples:
            writer.writerow([repr(float(value))])
