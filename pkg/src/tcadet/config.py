"""Scenario configuration: YAML schema, validation, overrides, and scenario assembly.

A run is described by one structured config file (see configs/ for shipped
examples and README for the schema).  Command-line overrides use dotted-path
``key=value`` pairs whose values are parsed as YAML scalars.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .analytic import q_inverse
from .covariance import (CouplingPreset, CovarianceSet, build_synthetic_covariance,
                         factor, load_covariance)
from .detectors import DetectorKind, DetectorRequest, DetectorSpec, build_detector
from .errors import ConfigError
from .grids import SamplingGrid
from .montecarlo import Hypothesis
from .signalmodel import (ChannelModel, SignalGrid, SignalModelParams, make_channel,
                          synthesize_signal)

# Total-power mode pins the upper-bound detector at pd = 1 - 1e-9 when its
# false-alarm rate is 1e-6, so the other detectors are never power limited.
TOTAL_POWER_PFA = 1e-6
TOTAL_POWER_MARGIN = 1e-9

_EXPERIMENT_KINDS = ("dist", "roc", "sweep")


def _require(mapping: dict, key: str, path: str) -> Any:
    if not isinstance(mapping, dict) or key not in mapping:
        raise ConfigError(f"{path}.{key}" if path else key, "missing required key")
    return mapping[key]


def _get(mapping: dict, key: str, default: Any) -> Any:
    if not isinstance(mapping, dict):
        return default
    return mapping.get(key, default)


def _as_int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    return value


def _as_float(value: Any, path: str) -> float:
    # YAML 1.1 reads exponent forms like 20.0e9 as strings; accept them.
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            raise ConfigError(path, f"expected a number, got {value!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class GridConfig:
    K: int
    T: int
    N_R: int
    f_min_hz: float
    f_max_hz: float
    spacing_m: float


@dataclass(frozen=True)
class CovarianceConfig:
    preset: Optional[str] = None         # "tight" | "weak"
    coupling_scale: Optional[float] = None
    noise_power: float = 1.0
    file: Optional[str] = None


@dataclass(frozen=True)
class ChannelConfig:
    kind: str = "end_fire"               # "end_fire" | "file"
    direction_cos: float = 1.0
    file: Optional[str] = None


@dataclass(frozen=True)
class SignalConfig:
    theta_k: float
    theta_t: float
    snr_db: Optional[float] = None
    total_power_mode: bool = False
    channel: ChannelConfig = field(default_factory=ChannelConfig)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    n_trials: int = 100_000
    hypotheses: tuple[Hypothesis, ...] = (Hypothesis.H0, Hypothesis.H1)
    grid_points: int = 401
    dump_samples: bool = False
    pfa_min: float = 1e-6
    pfa_max: float = 0.5
    pfa_points: int = 25
    theta_k_grid: tuple[float, ...] = ()
    fixed_pfa: float = 1e-6


@dataclass(frozen=True)
class ScenarioConfig:
    grid: GridConfig
    covariance: CovarianceConfig
    signal: SignalConfig
    detectors: tuple[DetectorRequest, ...]
    experiment: ExperimentConfig
    seed: int
    output_dir: str
    label: str
    resolved: dict = field(repr=False, default_factory=dict)


def apply_overrides(mapping: dict, overrides: list[str]) -> dict:
    """Apply dotted-path ``key=value`` overrides; values are YAML scalars."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like section.key=value")
        dotted, raw = item.split("=", 1)
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ConfigError(dotted, f"cannot parse override value {raw!r}: {exc}")
        node = mapping
        keys = dotted.split(".")
        for key in keys[:-1]:
            nxt = node.get(key)
            if not isinstance(nxt, dict):
                nxt = {}
                node[key] = nxt
            node = nxt
        node[keys[-1]] = value
    return mapping


def load_config(path, overrides: Optional[list[str]] = None) -> ScenarioConfig:
    """Parse and validate a scenario config file, with optional overrides applied."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config", f"file not found: {path}")
    try:
        mapping = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"cannot parse {path}: {exc}")
    if not isinstance(mapping, dict):
        raise ConfigError("config", f"{path} must hold a mapping at top level")
    if overrides:
        mapping = apply_overrides(mapping, list(overrides))
    return parse_config(mapping, base_dir=path.parent)


def parse_config(mapping: dict, base_dir: Path = Path(".")) -> ScenarioConfig:
    grid_map = _require(mapping, "grid", "")
    grid = GridConfig(
        K=_as_int(_require(grid_map, "K", "grid"), "grid.K"),
        T=_as_int(_require(grid_map, "T", "grid"), "grid.T"),
        N_R=_as_int(_require(grid_map, "N_R", "grid"), "grid.N_R"),
        f_min_hz=_as_float(_require(grid_map, "f_min_hz", "grid"), "grid.f_min_hz"),
        f_max_hz=_as_float(_require(grid_map, "f_max_hz", "grid"), "grid.f_max_hz"),
        spacing_m=_as_float(_require(grid_map, "spacing_m", "grid"), "grid.spacing_m"),
    )
    for name in ("K", "T", "N_R"):
        if getattr(grid, name) < 1:
            raise ConfigError(f"grid.{name}", "must be at least 1")
    if grid.spacing_m <= 0:
        raise ConfigError("grid.spacing_m", "must be positive")
    if grid.K > 1 and grid.f_max_hz <= grid.f_min_hz:
        raise ConfigError("grid.f_max_hz", "must exceed f_min_hz when K > 1")

    cov_map = _require(mapping, "covariance", "")
    cov = CovarianceConfig(
        preset=_get(cov_map, "preset", None),
        coupling_scale=_get(cov_map, "coupling_scale", None),
        noise_power=_as_float(_get(cov_map, "noise_power", 1.0), "covariance.noise_power"),
        file=_get(cov_map, "file", None),
    )
    if (cov.preset is None) == (cov.file is None):
        raise ConfigError("covariance", "exactly one of 'preset' or 'file' is required")
    if cov.preset is not None and cov.preset not in ("tight", "weak"):
        raise ConfigError("covariance.preset", f"must be 'tight' or 'weak', got {cov.preset!r}")
    if cov.coupling_scale is not None and not 0.0 <= cov.coupling_scale < 1.0:
        raise ConfigError("covariance.coupling_scale", "must lie in [0, 1)")
    if cov.file is not None and not (base_dir / cov.file).is_file():
        raise ConfigError("covariance.file", f"file not found: {base_dir / cov.file}")

    sig_map = _require(mapping, "signal", "")
    chan_map = _get(sig_map, "channel", {})
    channel = ChannelConfig(
        kind=_get(chan_map, "kind", "end_fire"),
        direction_cos=_as_float(_get(chan_map, "direction_cos", 1.0),
                                "signal.channel.direction_cos"),
        file=_get(chan_map, "file", None),
    )
    if channel.kind not in ("end_fire", "file"):
        raise ConfigError("signal.channel.kind", f"must be 'end_fire' or 'file', got {channel.kind!r}")
    if channel.kind == "file":
        if channel.file is None:
            raise ConfigError("signal.channel.file", "required when kind is 'file'")
        if not (base_dir / channel.file).is_file():
            raise ConfigError("signal.channel.file", f"file not found: {base_dir / channel.file}")
    snr_db = _get(sig_map, "snr_db", None)
    total_power = bool(_get(sig_map, "total_power_mode", False))
    if (snr_db is None) == (not total_power):
        raise ConfigError("signal", "exactly one of 'snr_db' or 'total_power_mode' is required")
    signal = SignalConfig(
        theta_k=_as_float(_require(sig_map, "theta_k", "signal"), "signal.theta_k"),
        theta_t=_as_float(_require(sig_map, "theta_t", "signal"), "signal.theta_t"),
        snr_db=None if snr_db is None else _as_float(snr_db, "signal.snr_db"),
        total_power_mode=total_power,
        channel=channel,
    )

    det_list = _require(mapping, "detectors", "")
    if not isinstance(det_list, list) or not det_list:
        raise ConfigError("detectors", "must be a non-empty list")
    requests = []
    kinds = {k.value: k for k in DetectorKind}
    for i, entry in enumerate(det_list):
        if not isinstance(entry, dict) or "kind" not in entry:
            raise ConfigError(f"detectors[{i}]", "each entry needs a 'kind'")
        kind = entry["kind"]
        if kind not in kinds:
            raise ConfigError(f"detectors[{i}].kind",
                              f"must be one of {sorted(kinds)}, got {kind!r}")
        L = entry.get("L")
        if kinds[kind] is DetectorKind.MA:
            if L is None:
                raise ConfigError(f"detectors[{i}].L", "MA detector requires L")
            L = _as_int(L, f"detectors[{i}].L")
            if L < 0 or L % 2 != 0:
                raise ConfigError(f"detectors[{i}].L", f"must be even and non-negative, got {L}")
            if 2 * L + 1 > grid.K:
                raise ConfigError(f"detectors[{i}].L",
                                  f"window 2L+1 = {2 * L + 1} exceeds grid.K = {grid.K}")
        requests.append(DetectorRequest(kind=kinds[kind], L=L))

    exp_map = _require(mapping, "experiment", "")
    kind = _require(exp_map, "kind", "experiment")
    if kind not in _EXPERIMENT_KINDS:
        raise ConfigError("experiment.kind", f"must be one of {_EXPERIMENT_KINDS}, got {kind!r}")
    hyp_raw = _get(exp_map, "hypotheses", ["h0", "h1"])
    try:
        hypotheses = tuple(Hypothesis(h) for h in hyp_raw)
    except ValueError:
        raise ConfigError("experiment.hypotheses", f"entries must be 'h0' or 'h1', got {hyp_raw!r}")
    experiment = ExperimentConfig(
        kind=kind,
        n_trials=_as_int(_get(exp_map, "n_trials", 100_000), "experiment.n_trials"),
        hypotheses=hypotheses,
        grid_points=_as_int(_get(exp_map, "grid_points", 401), "experiment.grid_points"),
        dump_samples=bool(_get(exp_map, "dump_samples", False)),
        pfa_min=_as_float(_get(exp_map, "pfa_min", 1e-6), "experiment.pfa_min"),
        pfa_max=_as_float(_get(exp_map, "pfa_max", 0.5), "experiment.pfa_max"),
        pfa_points=_as_int(_get(exp_map, "pfa_points", 25), "experiment.pfa_points"),
        theta_k_grid=tuple(float(v) for v in _get(exp_map, "theta_k_grid", [])),
        fixed_pfa=_as_float(_get(exp_map, "fixed_pfa", 1e-6), "experiment.fixed_pfa"),
    )
    if experiment.n_trials < 1:
        raise ConfigError("experiment.n_trials", "must be at least 1")
    if not 0 < experiment.pfa_min < experiment.pfa_max < 1:
        raise ConfigError("experiment", "need 0 < pfa_min < pfa_max < 1")
    if kind == "sweep" and not experiment.theta_k_grid:
        raise ConfigError("experiment.theta_k_grid", "required for sweep experiments")
    if not 0 < experiment.fixed_pfa < 1:
        raise ConfigError("experiment.fixed_pfa", "must lie strictly between 0 and 1")

    seed = _as_int(_get(mapping, "seed", 0), "seed")
    if seed < 0:
        raise ConfigError("seed", "must be non-negative")
    output_dir = _get(mapping, "output_dir", "out")
    default_label = cov.preset if cov.preset is not None else "file"
    label = str(_get(mapping, "label", default_label))

    resolved = {
        "grid": vars(grid).copy(),
        "covariance": vars(cov).copy(),
        "signal": {**{k: v for k, v in vars(signal).items() if k != "channel"},
                   "channel": vars(channel).copy()},
        "detectors": [{"kind": r.kind.value, **({"L": r.L} if r.L is not None else {})}
                      for r in requests],
        "experiment": {**vars(experiment),
                       "hypotheses": [h.value for h in hypotheses],
                       "theta_k_grid": list(experiment.theta_k_grid)},
        "seed": seed,
        "output_dir": str(output_dir),
        "label": label,
    }
    return ScenarioConfig(grid=grid, covariance=cov, signal=signal,
                          detectors=tuple(requests), experiment=experiment,
                          seed=seed, output_dir=str(output_dir), label=label,
                          resolved=resolved)


@dataclass(eq=False)
class Scenario:
    """A fully built scenario: factored covariances, signal, and bound detectors."""

    config: ScenarioConfig
    grid: SamplingGrid
    covset: CovarianceSet
    params: SignalModelParams
    signal: SignalGrid
    detectors: list[DetectorSpec]


def saturating_snr_db(channel_vectors: np.ndarray, covset: CovarianceSet,
                      pfa: float = TOTAL_POWER_PFA,
                      margin: float = TOTAL_POWER_MARGIN) -> float:
    """SNR at which the upper-bound detector reaches pd = 1 - margin at the given pfa.

    Solves for the matched-filter deflection sqrt(m_u) = Qinv(pfa) + Qinv(margin)
    and converts the implied gain back to an average per-frequency SNR.
    """
    target_mu = (q_inverse(pfa) + q_inverse(margin)) ** 2
    per_gain_mu = covset.grid.T * float(np.einsum(
        "ki,kij,kj->", channel_vectors.conj(), covset.inv, channel_vectors).real)
    gain_sq = target_mu / per_gain_mu
    traces = np.trace(covset.matrices, axis1=1, axis2=2).real
    per_unit = float(np.mean(np.sum(np.abs(channel_vectors) ** 2, axis=1) / traces))
    return float(10.0 * math.log10(gain_sq * per_unit))


def build_scenario(cfg: ScenarioConfig, base_dir: Path = Path(".")) -> Scenario:
    """Materialize a validated config: build and factor everything the experiment needs."""
    grid = SamplingGrid.from_band(cfg.grid.K, cfg.grid.T, cfg.grid.N_R,
                                  cfg.grid.f_min_hz, cfg.grid.f_max_hz, cfg.grid.spacing_m)
    if cfg.covariance.file is not None:
        covset = load_covariance(grid, base_dir / cfg.covariance.file)
    else:
        if cfg.covariance.preset == "tight":
            preset = CouplingPreset.tight(cfg.covariance.noise_power)
        else:
            preset = CouplingPreset.weak(cfg.covariance.noise_power)
        if cfg.covariance.coupling_scale is not None:
            preset = CouplingPreset.custom(cfg.covariance.coupling_scale,
                                           cfg.covariance.noise_power)
        covset = build_synthetic_covariance(grid, preset)
    covset = factor(covset)

    if cfg.signal.channel.kind == "file":
        channel = ChannelModel.from_file(base_dir / cfg.signal.channel.file)
    else:
        channel = ChannelModel.steering(cfg.signal.channel.direction_cos)
    vectors = make_channel(grid, channel)
    if cfg.signal.total_power_mode:
        snr_db = saturating_snr_db(vectors, covset)
    else:
        snr_db = cfg.signal.snr_db
    params = SignalModelParams(theta_k=cfg.signal.theta_k, theta_t=cfg.signal.theta_t,
                               target_snr_db=snr_db, channel=channel)
    signal = synthesize_signal(params, grid, covset)
    detectors = [build_detector(req, covset, known_signal=signal) for req in cfg.detectors]
    return Scenario(config=cfg, grid=grid, covset=covset, params=params,
                    signal=signal, detectors=detectors)
