"""Detection statistics and exact performance analysis for unknown wideband
signals received on mutually-coupled antenna arrays with frequency-varying
correlated noise."""

__version__ = "0.1.0"

from .analytic import (GaussianParams, Gx2Params, Gx2Term, UpperLaw,
                       constant_distribution, gaussian_cdf, gx2_cdf, gx2_quantile,
                       ma_distribution, q_function, q_inverse, rapid_distribution,
                       upper_distribution, upper_pd_closed_form)
from .covariance import (CouplingKind, CouplingPreset, CovarianceSet,
                         build_synthetic_covariance, factor, load_covariance,
                         save_covariance)
from .detectors import (DetectorKind, DetectorRequest, DetectorSpec, MaOperator,
                        MaWeights, build_detector, build_ma_operator, constant_detector,
                        ma_detector, ma_weights, rapid_detector, stat_constant, stat_ma,
                        stat_rapid, stat_upper, statistic, upper_detector)
from .errors import (ConfigError, DegenerateSignal, DimensionMismatch, FormatError,
                     InvalidWindow, NotHermitian, NotPositiveDefinite,
                     QuadratureFailure, TcadetError)
from .experiments import (OverlayResult, RocCurve, SweepResult, analytic_roc,
                          default_pfa_grid, distribution_overlay, theta_sweep)
from .grids import SamplingGrid
from .montecarlo import (EmpiricalDistribution, Hypothesis, PdPfaEstimate, TrialPlan,
                         estimate_pd_pfa, ks_distance, run_trials, save_samples,
                         trial_rng)
from .signalmodel import (ChannelKind, ChannelModel, SignalGrid, SignalModelParams,
                          calibrate_gain, make_channel, measured_snr_db,
                          sample_observation, synthesize_signal)
