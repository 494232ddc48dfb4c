"""Exact H0/H1 distributions of the statistics and a generalized chi-square evaluator.

Each detector statistic is a quadratic (or linear) form in correlated complex
Gaussian samples, so its law is a weighted sum of independent noncentral
chi-square variables, possibly plus a Gaussian term:

* MA: weights are the eigenvalues of the whitened operator (indefinite in
  general), each with 2T degrees of freedom;
* constant regime: a single chi-square with 2*N_R*T degrees of freedom;
* rapid regime: a single chi-square with 2*N_R*K*T degrees of freedom;
* upper bound: a plain real Gaussian.

The CDF of the weighted sum is evaluated by numerical inversion of its
characteristic function (Imhof-type).  The oscillatory tail of the inversion
integral is handled with QUADPACK's Fourier-weight transform integration,
which keeps the evaluator accurate even for 2 degrees of freedom where naive
truncation of the integral is hopeless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import quad
from scipy.special import erfc, erfcinv

from .covariance import CovarianceSet
from .detectors import DetectorKind, DetectorSpec, MaOperator
from .errors import DegenerateSignal, DimensionMismatch, QuadratureFailure
from .signalmodel import SignalGrid

# Weighted terms whose weight and weight*noncentrality are both below this
# relative level are eigendecomposition noise and are dropped before CDF
# evaluation.
NEGLIGIBLE_WEIGHT = 1e-12


@dataclass(frozen=True)
class Gx2Term:
    """One weighted noncentral chi-square component."""

    weight: float
    dof: int
    noncentrality: float = 0.0

    def __post_init__(self):
        if not isinstance(self.dof, (int, np.integer)) or self.dof < 1:
            raise ValueError(f"dof must be a positive integer, got {self.dof!r}")
        if self.noncentrality < 0:
            raise ValueError(f"noncentrality must be non-negative, got {self.noncentrality}")


@dataclass(frozen=True, eq=False)
class Gx2Params:
    """Parameters of a generalized chi-square law: weighted chi-square terms plus a Gaussian part."""

    terms: tuple[Gx2Term, ...]
    gaussian_mean: float = 0.0
    gaussian_variance: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.gaussian_variance < 0:
            raise ValueError("gaussian_variance must be non-negative")
        if not self.terms and self.gaussian_variance == 0:
            raise ValueError("need at least one chi-square term or a nonzero Gaussian variance")

    def _arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        lam = np.array([t.weight for t in self.terms])
        dof = np.array([t.dof for t in self.terms], dtype=float)
        delta = np.array([t.noncentrality for t in self.terms])
        return lam, dof, delta

    def mean(self) -> float:
        lam, dof, delta = self._arrays()
        return float(np.sum(lam * (dof + delta)) + self.gaussian_mean)

    def variance(self) -> float:
        lam, dof, delta = self._arrays()
        return float(np.sum(lam ** 2 * (2 * dof + 4 * delta)) + self.gaussian_variance)

    def total_dof(self) -> int:
        return int(sum(t.dof for t in self.terms))

    def total_noncentrality(self) -> float:
        return float(sum(t.noncentrality for t in self.terms))


@dataclass(frozen=True)
class GaussianParams:
    """Mean and variance of a real Gaussian statistic."""

    mean: float
    variance: float


@dataclass(frozen=True)
class UpperLaw:
    """Upper-bound detector laws under both hypotheses."""

    h1: GaussianParams
    h0: GaussianParams


def _whitened_stack(covset: CovarianceSet, signal: SignalGrid) -> np.ndarray:
    """R_k^{-1/2} alpha_{k,t} stacked frequency-major: shape (T, K*N_R)."""
    y = np.einsum("kij,ktj->tki", covset.inv_sqrt, signal.values)
    return y.reshape(covset.grid.T, -1)


def _check_signal(covset: CovarianceSet, signal: Optional[SignalGrid]) -> None:
    if signal is not None and signal.values.shape != (
            covset.grid.K, covset.grid.T, covset.grid.N_R):
        raise DimensionMismatch(
            f"signal shape {signal.values.shape} does not match the covariance grid")


def ma_distribution(op: MaOperator, covset: CovarianceSet,
                    signal: Optional[SignalGrid] = None) -> Gx2Params:
    """Law of the MA statistic: one weighted chi-square term per eigenvalue.

    The dense whitened operator (block r, s) = R_r^{1/2} A_rs R_s^{1/2} is
    eigendecomposed; each eigenvalue contributes a term with 2T degrees of
    freedom whose noncentrality sums the squared projections of the whitened
    signal on that eigenvector over time.  All noncentralities are zero with
    the signal absent.
    """
    covset.require_factors()
    if op.K != covset.grid.K or op.N_R != covset.grid.N_R:
        raise DimensionMismatch("operator dimensions do not match the covariance set")
    _check_signal(covset, signal)
    K, N, T = covset.grid.K, covset.grid.N_R, covset.grid.T
    dense = op.dense().reshape(K, N, K, N)
    half = np.einsum("rab,rbsc->rasc", covset.sqrt, dense)
    whitened = np.einsum("rasc,scd->rasd", half, covset.sqrt).reshape(K * N, K * N)
    whitened = 0.5 * (whitened + whitened.conj().T)
    lam, phi = np.linalg.eigh(whitened)
    if signal is None:
        delta = np.zeros(K * N)
    else:
        mu = _whitened_stack(covset, signal) @ phi.conj()  # (T, K*N_R)
        delta = np.sum(np.abs(mu) ** 2, axis=0)
    # Drop eigen-noise terms: negligible weight whose noncentrality carries no mass.
    scale_w = np.max(np.abs(lam))
    effect = np.abs(lam) * (2 * T + delta)
    keep = (np.abs(lam) >= NEGLIGIBLE_WEIGHT * scale_w) | (
        effect >= NEGLIGIBLE_WEIGHT * np.sum(effect))
    terms = tuple(Gx2Term(weight=float(w), dof=2 * T, noncentrality=float(d))
                  for w, d in zip(lam[keep], delta[keep]))
    return Gx2Params(terms=terms)


def constant_distribution(spec: DetectorSpec, covset: CovarianceSet,
                          signal: Optional[SignalGrid] = None) -> Gx2Params:
    """Law of the constant-regime statistic: a single (non)central chi-square."""
    if spec.kind is not DetectorKind.CONSTANT:
        raise ValueError(f"expected a constant-regime detector spec, got {spec.kind}")
    covset.require_factors()
    _check_signal(covset, signal)
    dof = 2 * covset.grid.N_R * covset.grid.T
    if signal is None:
        return Gx2Params(terms=(Gx2Term(weight=1.0, dof=dof),))
    pooled = np.einsum("kij,ktj->ti", covset.inv, signal.values)
    delta = np.einsum("ti,ij,tj->", pooled.conj(), spec.pooled_inverse, pooled).real
    return Gx2Params(terms=(Gx2Term(weight=1.0, dof=dof, noncentrality=float(delta)),))


def rapid_distribution(covset: CovarianceSet,
                       signal: Optional[SignalGrid] = None) -> Gx2Params:
    """Law of the rapid-regime statistic: a single (non)central chi-square."""
    covset.require_factors()
    _check_signal(covset, signal)
    dof = 2 * covset.grid.N_R * covset.grid.K * covset.grid.T
    if signal is None:
        return Gx2Params(terms=(Gx2Term(weight=1.0, dof=dof),))
    delta = np.einsum("kti,kij,ktj->", signal.values.conj(), covset.inv, signal.values).real
    return Gx2Params(terms=(Gx2Term(weight=1.0, dof=dof, noncentrality=float(delta)),))


def upper_distribution(covset: CovarianceSet, signal: SignalGrid) -> UpperLaw:
    """Gaussian laws of the upper-bound statistic under both hypotheses.

    The statistic is m_u plus a real Gaussian whose variance, under the
    unit-variance-per-part sampling convention used throughout, equals m_u
    itself.
    """
    covset.require_factors()
    _check_signal(covset, signal)
    m_u = float(np.einsum("kti,kij,ktj->", signal.values.conj(), covset.inv,
                          signal.values).real)
    if m_u <= 0.0:
        raise DegenerateSignal("upper-bound detector requires a nonzero signal")
    v_u = m_u
    return UpperLaw(h1=GaussianParams(mean=m_u, variance=v_u),
                    h0=GaussianParams(mean=0.0, variance=v_u))


# ---------------------------------------------------------------------------
# Generalized chi-square CDF by characteristic-function inversion.
#
# With weights lam_i, degrees of freedom n_i, noncentralities d_i and a
# Gaussian part N(m, s2),
#
#   F(x) = 1/2 - (1/pi) * int_0^inf sin(theta(u)) / (u * rho(u)) du,
#   theta(u) = phi(u) - a*u,     a = (x - m) / 2,
#   phi(u)   = (1/2) sum_i [ n_i atan(lam_i u) + d_i lam_i u / (1 + lam_i^2 u^2) ],
#   rho(u)   = prod_i (1 + lam_i^2 u^2)^{n_i/4}
#              * exp( (1/2) sum_i d_i lam_i^2 u^2 / (1 + lam_i^2 u^2) + s2 u^2 / 8 ).
#
# phi is bounded, so after splitting sin(phi - a u) into sin(phi)cos(au) -
# cos(phi)sin(au) the integrand factors into smooth decaying densities times
# pure cos/sin weights, which QUADPACK's Fourier integrator sums with series
# acceleration.  The first half-cycle [0, u0] is integrated directly to keep
# the 1/u endpoint of the sin-weight density away from the transform.
# ---------------------------------------------------------------------------

_QUAD_EPSABS = 1e-11
_FAIL_ABOVE = 5e-9


def _integrator_pieces(params: Gx2Params):
    lam, dof, delta = params._arrays()
    s2 = params.gaussian_variance
    slope0 = 0.5 * float(np.sum(dof * lam + delta * lam))

    if len(lam) <= 24:
        # Plain-math loops beat numpy dispatch overhead for the small term
        # counts that dominate quadrature-heavy paths (single-term laws).
        triplets = [(float(l), float(n), float(d)) for l, n, d in zip(lam, dof, delta)]

        def phi(u):
            acc = 0.0
            for l, n, d in triplets:
                lu = l * u
                acc += n * math.atan(lu) + d * lu / (1.0 + lu * lu)
            return 0.5 * acc

        def log_rho(u):
            acc = 0.125 * s2 * u * u
            for l, n, d in triplets:
                lu2 = (l * u) ** 2
                acc += 0.25 * n * math.log1p(lu2) + 0.5 * d * lu2 / (1.0 + lu2)
            return acc
    else:
        def phi(u):
            lu = lam * u
            return 0.5 * float(np.sum(dof * np.arctan(lu) + delta * lu / (1.0 + lu * lu)))

        def log_rho(u):
            lu2 = (lam * u) ** 2
            return float(np.sum(0.25 * dof * np.log1p(lu2) + 0.5 * delta * lu2 / (1.0 + lu2))
                         + 0.125 * s2 * u * u)

    def envelope(u):
        return math.exp(-log_rho(u)) / u

    return phi, log_rho, envelope, slope0


def _decay_point(log_rho) -> float:
    """Smallest power-of-two u where the integrand envelope is below ~1e-20."""
    u = 1e-3
    for _ in range(80):
        if log_rho(u) >= 46.0:
            return u
        u *= 2.0
        if u > 1e9:
            break
    return math.inf


def _quad_checked(func, lo, hi, **kwargs):
    out = quad(func, lo, hi, full_output=1, epsabs=_QUAD_EPSABS, epsrel=0.0, **kwargs)
    value, abserr = out[0], out[1]
    converged = len(out) < 4
    return value, abserr, converged


def gx2_cdf(params: Gx2Params, x: float) -> float:
    """CDF of the generalized chi-square law at x (absolute accuracy target 1e-8).

    Raises QuadratureFailure when the inversion integral cannot be evaluated
    to tolerance within budget.
    """
    phi, log_rho, envelope, slope0 = _integrator_pieces(params)
    a = 0.5 * (x - params.gaussian_mean)

    def combined(u):
        if u == 0.0:
            return slope0 - a
        return math.sin(phi(u) - a * u) * envelope(u)

    support = _decay_point(log_rho)
    cycles = abs(a) * support / (2.0 * math.pi)
    breaks: list[float] = []
    if math.isfinite(support):
        # Geometric breakpoints so mass concentrated near u = 0 cannot hide
        # from the initial coarse panels of a wide integration interval.
        breaks = [b for b in (1e-3 * 2.0 ** j for j in range(60)) if b < support]
    if abs(a) < 1e-12:
        if math.isfinite(support):
            integral, total_err, _ = _quad_checked(combined, 0.0, support,
                                                   limit=500, points=breaks)
        else:
            integral, total_err, _ = _quad_checked(combined, 0.0, np.inf, limit=500)
    elif math.isfinite(support) and cycles <= 1000.0:
        # The envelope dies within a manageable number of oscillations:
        # integrate its support directly with per-cycle subdivision headroom.
        limit = int(2.0 * cycles) + 100 + len(breaks)
        integral, total_err, _ = _quad_checked(combined, 0.0, support,
                                               limit=limit, points=breaks)
    else:
        # Slowly decaying envelope (low total degrees of freedom): split off
        # the linear phase and let the Fourier transform integrator sum the
        # oscillatory tail with series acceleration.  The first half-cycle is
        # integrated directly so the 1/u endpoint of the sin-weight density
        # stays out of the transform.
        w = abs(a)
        u0 = min(math.pi / w, 50.0)
        head, err0, _ = _quad_checked(combined, 0.0, u0, limit=200)
        f_cos = lambda u: math.sin(phi(u)) * envelope(u)
        f_sin = lambda u: math.cos(phi(u)) * envelope(u)
        tail_c, err_c, _ = _quad_checked(f_cos, u0, np.inf,
                                         weight="cos", wvar=w, limit=300, limlst=300)
        tail_s, err_s, _ = _quad_checked(f_sin, u0, np.inf,
                                         weight="sin", wvar=w, limit=300, limlst=300)
        sign = 1.0 if a > 0 else -1.0
        integral = head + tail_c - sign * tail_s
        total_err = err0 + err_c + err_s
    # QUADPACK sometimes flags slow convergence while the error estimate is
    # still far inside the 1e-8 target; trust the estimate.
    if total_err > _FAIL_ABOVE:
        raise QuadratureFailure(
            f"CDF inversion did not converge at x={x} "
            f"({len(params.terms)} terms, error estimate {total_err:.2e})")
    prob = 0.5 - integral / math.pi
    return float(min(1.0, max(0.0, prob)))


def gx2_quantile(params: Gx2Params, p: float) -> float:
    """Inverse CDF: the x with |gx2_cdf(x) - p| < 1e-9, by bracketing and bisection."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie strictly between 0 and 1, got {p}")
    from scipy.optimize import brentq

    center = params.mean()
    spread = max(math.sqrt(params.variance()), 1e-12 * max(abs(center), 1.0), 1e-300)
    lo, hi = center - 4.0 * spread, center + 4.0 * spread
    for _ in range(200):
        if gx2_cdf(params, lo) < p:
            break
        lo -= (center - lo)
    else:
        raise QuadratureFailure(f"could not bracket quantile p={p} from below")
    for _ in range(200):
        if gx2_cdf(params, hi) > p:
            break
        hi += (hi - center)
    else:
        raise QuadratureFailure(f"could not bracket quantile p={p} from above")
    root = brentq(lambda x: gx2_cdf(params, x) - p, lo, hi,
                  xtol=1e-10 * max(1.0, abs(center) + spread), rtol=1e-15, maxiter=300)
    if abs(gx2_cdf(params, root) - p) > 1e-9:
        raise QuadratureFailure(f"quantile refinement stalled at p={p}")
    return float(root)


def q_function(x: float) -> float:
    """Standard normal tail probability Q(x) = P(N(0,1) > x)."""
    return float(0.5 * erfc(x / math.sqrt(2.0)))


def q_inverse(p: float) -> float:
    """Inverse of the standard normal tail probability."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie strictly between 0 and 1, got {p}")
    return float(math.sqrt(2.0) * erfcinv(2.0 * p))


def gaussian_cdf(law: GaussianParams, x) -> np.ndarray:
    """CDF of a real Gaussian law, vectorized over x."""
    z = (np.asarray(x, dtype=float) - law.mean) / math.sqrt(law.variance)
    return 0.5 * erfc(-z / math.sqrt(2.0))


def upper_pd_closed_form(pfa: float, g: GaussianParams) -> float:
    """Detection probability of the upper-bound detector at a target false-alarm rate."""
    if not 0.0 < pfa < 1.0:
        raise ValueError(f"pfa must lie strictly between 0 and 1, got {pfa}")
    if g.variance <= 0.0:
        raise ValueError("Gaussian variance must be positive")
    return q_function(q_inverse(pfa) - g.mean / math.sqrt(g.variance))
