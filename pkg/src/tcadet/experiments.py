"""Experiment families: distribution overlays, analytic ROC curves, and phase-rate sweeps.

ROC curves and sweeps are computed from the analytic distributions (Monte
Carlo cannot reach the deep-tail false-alarm rates of interest); the overlay
experiment pairs the analytic CDF with an empirical one and quantifies the
agreement with a Kolmogorov-Smirnov distance.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import analytic
from .analytic import Gx2Params, gaussian_cdf, gx2_cdf, gx2_quantile
from .covariance import CovarianceSet
from .detectors import (DetectorKind, DetectorRequest, DetectorSpec, build_detector)
from .montecarlo import (EmpiricalDistribution, Hypothesis, TrialPlan, ks_distance,
                         run_trials)
from .signalmodel import SignalGrid, SignalModelParams, synthesize_signal


@dataclass(eq=False)
class RocCurve:
    """Detection probability along a strictly increasing false-alarm grid."""

    detector: str
    scenario: str
    pfa: np.ndarray
    pd: np.ndarray

    def __post_init__(self):
        pfa = np.asarray(self.pfa, dtype=float)
        pd = np.asarray(self.pd, dtype=float)
        if pfa.shape != pd.shape:
            raise ValueError("pfa and pd must have the same shape")
        if not np.all(np.diff(pfa) > 0):
            raise ValueError("pfa grid must be strictly increasing")
        if np.any((pfa < 0) | (pfa > 1)) or np.any((pd < -1e-12) | (pd > 1 + 1e-12)):
            raise ValueError("pfa and pd must lie in [0, 1]")
        self.pfa, self.pd = pfa, np.clip(pd, 0.0, 1.0)


@dataclass(eq=False)
class SweepResult:
    """Per-detector detection probability across a grid of frequency phase rates."""

    theta_k: np.ndarray
    pd: dict[str, np.ndarray]
    fixed_pfa: float


@dataclass(eq=False)
class OverlayResult:
    """Analytic and empirical CDFs of one statistic on a shared grid."""

    detector: str
    hypothesis: Hypothesis
    x: np.ndarray
    analytic_cdf: np.ndarray
    empirical: EmpiricalDistribution
    ks: float


def default_pfa_grid(lo: float = 1e-6, hi: float = 0.5, points: int = 25) -> np.ndarray:
    """Logarithmically spaced false-alarm grid."""
    return np.geomspace(lo, hi, points)


def detector_law(spec: DetectorSpec, covset: CovarianceSet,
                 signal: Optional[SignalGrid]) -> Gx2Params:
    """Analytic law of a chi-square-family detector statistic (signal=None for H0)."""
    if spec.kind is DetectorKind.MA:
        return analytic.ma_distribution(spec.ma_operator, covset, signal)
    if spec.kind is DetectorKind.CONSTANT:
        return analytic.constant_distribution(spec, covset, signal)
    if spec.kind is DetectorKind.RAPID:
        return analytic.rapid_distribution(covset, signal)
    raise ValueError("the upper-bound detector follows a Gaussian law; use upper_distribution")


def analytic_roc(spec: DetectorSpec, covset: CovarianceSet, signal: SignalGrid,
                 pfa_grid: Sequence[float], scenario: str = "default") -> RocCurve:
    """ROC from the analytic laws: threshold at each target pfa, then the H1 tail there.

    The upper-bound detector goes through its Gaussian H0 quantile and H1
    tail, which reduces algebraically to the closed-form expression.
    """
    pfa_grid = np.asarray(pfa_grid, dtype=float)
    if np.any((pfa_grid <= 0) | (pfa_grid >= 1)) or not np.all(np.diff(pfa_grid) > 0):
        raise ValueError("pfa grid must be strictly increasing inside (0, 1)")
    if spec.kind is DetectorKind.UPPER:
        law = analytic.upper_distribution(covset, spec.known_signal)
        scale = math.sqrt(law.h0.variance)
        pd = [analytic.q_function((scale * analytic.q_inverse(p) - law.h1.mean)
                                  / math.sqrt(law.h1.variance)) for p in pfa_grid]
    else:
        h0 = detector_law(spec, covset, None)
        h1 = detector_law(spec, covset, signal)
        pd = []
        for p in pfa_grid:
            threshold = gx2_quantile(h0, 1.0 - p)
            pd.append(1.0 - gx2_cdf(h1, threshold))
    return RocCurve(detector=spec.label, scenario=scenario,
                    pfa=pfa_grid, pd=np.asarray(pd))


def theta_sweep(requests: Sequence[DetectorRequest], covset: CovarianceSet,
                signal_params: SignalModelParams, theta_k_grid: Sequence[float],
                fixed_pfa: float) -> SweepResult:
    """Detection probability vs. frequency phase rate at a fixed false-alarm rate.

    H0 thresholds of the chi-square-family detectors do not depend on the
    signal and are computed once; the signal is re-synthesized and the H1 law
    re-derived at every grid point.
    """
    if not 0.0 < fixed_pfa < 1.0:
        raise ValueError(f"fixed_pfa must lie strictly between 0 and 1, got {fixed_pfa}")
    theta_k_grid = np.asarray(theta_k_grid, dtype=float)
    if theta_k_grid.size == 0:
        raise ValueError("theta_k_grid must not be empty")

    specs: list[DetectorSpec] = []
    thresholds: dict[str, float] = {}
    for request in requests:
        if request.kind is DetectorKind.UPPER:
            specs.append(None)  # bound per grid point; its H0 law depends on the signal
            continue
        spec = build_detector(request, covset)
        specs.append(spec)
        thresholds[spec.label] = gx2_quantile(detector_law(spec, covset, None), 1.0 - fixed_pfa)

    pd: dict[str, list[float]] = {}
    for theta in theta_k_grid:
        signal = synthesize_signal(replace(signal_params, theta_k=float(theta)),
                                   covset.grid, covset)
        for request, spec in zip(requests, specs):
            if request.kind is DetectorKind.UPPER:
                law = analytic.upper_distribution(covset, signal)
                label = DetectorKind.UPPER.value
                value = analytic.upper_pd_closed_form(fixed_pfa, law.h1)
            else:
                label = spec.label
                h1 = detector_law(spec, covset, signal)
                value = 1.0 - gx2_cdf(h1, thresholds[label])
            pd.setdefault(label, []).append(value)
    return SweepResult(theta_k=theta_k_grid,
                       pd={k: np.asarray(v) for k, v in pd.items()},
                       fixed_pfa=fixed_pfa)


def distribution_overlay(spec: DetectorSpec, covset: CovarianceSet,
                         signal: Optional[SignalGrid], hypothesis: Hypothesis,
                         n_trials: int, master_seed: int, n_workers: int = 1,
                         grid_points: int = 401) -> OverlayResult:
    """Empirical vs. analytic CDF of one statistic under one hypothesis.

    The analytic CDF is evaluated on a grid spanning the empirical range; the
    KS distance uses a monotone interpolant of that grid at every sample
    (interpolation error is orders of magnitude below the KS resolution).
    """
    plan = TrialPlan(n_trials=n_trials, master_seed=master_seed, hypothesis=hypothesis,
                     detector=spec, covset=covset,
                     signal=signal if hypothesis is Hypothesis.H1 else None)
    emp = run_trials(plan, n_workers=n_workers)
    x = np.linspace(emp.samples[0], emp.samples[-1], grid_points)
    if spec.kind is DetectorKind.UPPER:
        law = analytic.upper_distribution(covset, spec.known_signal)
        gaussian = law.h1 if hypothesis is Hypothesis.H1 else law.h0
        cdf_grid = gaussian_cdf(gaussian, x)
        ks = ks_distance(emp, lambda s: gaussian_cdf(gaussian, s))
    else:
        law = detector_law(spec, covset, signal if hypothesis is Hypothesis.H1 else None)
        cdf_grid = np.array([gx2_cdf(law, xi) for xi in x])
        interp = PchipInterpolator(x, cdf_grid, extrapolate=False)
        ks = ks_distance(emp, lambda s: interp(np.clip(s, x[0], x[-1])))
    return OverlayResult(detector=spec.label, hypothesis=hypothesis, x=x,
                         analytic_cdf=cdf_grid, empirical=emp, ks=ks)


def write_roc_csv(path, curves: Sequence[RocCurve]) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pfa", "pd", "detector", "scenario"])
        for curve in curves:
            for pfa, pd in zip(curve.pfa, curve.pd):
                writer.writerow([repr(float(pfa)), repr(float(pd)), curve.detector, curve.scenario])


def write_sweep_csv(path, sweep: SweepResult) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta_k", "pd", "detector"])
        for detector, pd in sweep.pd.items():
            for theta, value in zip(sweep.theta_k, pd):
                writer.writerow([repr(float(theta)), repr(float(value)), detector])


def write_overlay_csv(path, overlay: OverlayResult) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "analytic_cdf", "empirical_cdf"])
        emp = overlay.empirical.ecdf(overlay.x)
        for x, a, e in zip(overlay.x, overlay.analytic_cdf, emp):
            writer.writerow([repr(float(x)), repr(float(a)), repr(float(e))])
