"""Command-line front end: config-driven experiments with reproducible outputs.

Subcommands: ``dist`` (CDF overlays), ``roc``, ``sweep``, ``validate`` (config
check only), and ``gx2`` (standalone generalized chi-square CDF/quantile).
Every experiment run writes CSV results plus a JSON manifest that is
sufficient to reproduce it exactly.  Exit codes: 0 success, 1 validation
failure, 2 numerical (quadrature) failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import Gx2Params, Gx2Term, gx2_cdf, gx2_quantile
from .config import Scenario, build_scenario, load_config
from .errors import ConfigError, QuadratureFailure, TcadetError
from .experiments import (OverlayResult, RocCurve, SweepResult, analytic_roc,
                          default_pfa_grid, distribution_overlay, theta_sweep,
                          write_overlay_csv, write_roc_csv, write_sweep_csv)
from .montecarlo import save_samples


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="scenario config file (YAML)")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default=None, help="override the config output directory")
    parser.add_argument("--workers", type=int, default=1, help="Monte Carlo worker processes")
    parser.add_argument("--no-plots", action="store_true", help="skip SVG plot output")
    parser.add_argument("overrides", nargs="*", metavar="key=value",
                        help="dotted-path config overrides, e.g. signal.theta_k=0.3")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tcadet",
                                     description="Detection experiments for coupled-array wideband sensing")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, description in (("dist", "analytic vs. empirical CDF overlays"),
                              ("roc", "analytic ROC curves"),
                              ("sweep", "detection probability vs. frequency phase rate")):
        _add_run_flags(sub.add_parser(name, help=description))
    validate = sub.add_parser("validate", help="check a config file and exit")
    validate.add_argument("--config", required=True)
    validate.add_argument("overrides", nargs="*", metavar="key=value")
    gx2 = sub.add_parser("gx2", help="standalone generalized chi-square evaluation")
    gx2.add_argument("--weights", required=True, help="comma-separated term weights")
    gx2.add_argument("--dofs", required=True, help="comma-separated degrees of freedom")
    gx2.add_argument("--noncentralities", default=None,
                     help="comma-separated noncentralities (default: all zero)")
    group = gx2.add_mutually_exclusive_group(required=True)
    group.add_argument("--x", type=float, help="evaluate the CDF at this point")
    group.add_argument("--p", type=float, help="evaluate the quantile at this probability")
    return parser


def _load_scenario(args) -> tuple[Scenario, Path]:
    import dataclasses

    cfg = load_config(args.config, args.overrides)
    if args.seed is not None:
        cfg.resolved["seed"] = args.seed
        cfg = dataclasses.replace(cfg, seed=args.seed)
    out_dir = Path(args.out) if args.out is not None else Path(cfg.output_dir)
    scenario = build_scenario(cfg, base_dir=Path(args.config).parent)
    return scenario, out_dir


def _write_manifest(out_dir: Path, scenario: Scenario, command: str, workers: int,
                    outputs: list[str]) -> None:
    manifest = {
        "command": command,
        "config": scenario.config.resolved,
        "seed": scenario.config.seed,
        "workers": workers,
        "versions": {
            "tcadet": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": __import__("scipy").__version__,
        },
        "outputs": sorted(outputs),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _savefig(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})


def _plot_overlays(out_dir: Path, overlays: list[OverlayResult]) -> list[str]:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    for overlay in overlays:
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(overlay.x, overlay.analytic_cdf, label="analytic")
        ax.plot(overlay.x, overlay.empirical.ecdf(overlay.x), "--", label="empirical")
        ax.set_xlabel("statistic")
        ax.set_ylabel("CDF")
        ax.set_title(f"{overlay.detector} | {overlay.hypothesis.value} (ks={overlay.ks:.4f})")
        ax.legend()
        name = f"overlay_{overlay.detector}_{overlay.hypothesis.value}.svg"
        _savefig(fig, out_dir / name)
        plt.close(fig)
        written.append(name)
    return written


def _plot_roc(out_dir: Path, curves: list[RocCurve]) -> list[str]:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for curve in curves:
        ax.semilogx(curve.pfa, curve.pd, marker="o", markersize=3, label=curve.detector)
    ax.set_xlabel("probability of false alarm")
    ax.set_ylabel("probability of detection")
    ax.set_ylim(0, 1.02)
    ax.legend()
    _savefig(fig, out_dir / "roc.svg")
    plt.close(fig)
    return ["roc.svg"]


def _plot_sweep(out_dir: Path, sweep: SweepResult) -> list[str]:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for detector, pd in sweep.pd.items():
        ax.plot(sweep.theta_k, pd, marker="o", markersize=3, label=detector)
    ax.set_xlabel("frequency phase rate (rad/sample)")
    ax.set_ylabel(f"probability of detection at pfa={sweep.fixed_pfa:g}")
    ax.set_ylim(0, 1.02)
    ax.legend()
    _savefig(fig, out_dir / "sweep.svg")
    plt.close(fig)
    return ["sweep.svg"]


def _run_dist(scenario: Scenario, out_dir: Path, workers: int, plots: bool) -> list[str]:
    exp = scenario.config.experiment
    outputs = []
    overlays = []
    for spec in scenario.detectors:
        for hypothesis in exp.hypotheses:
            overlay = distribution_overlay(
                spec, scenario.covset, scenario.signal, hypothesis,
                n_trials=exp.n_trials, master_seed=scenario.config.seed,
                n_workers=workers, grid_points=exp.grid_points)
            name = f"overlay_{overlay.detector}_{hypothesis.value}.csv"
            write_overlay_csv(out_dir / name, overlay)
            outputs.append(name)
            if exp.dump_samples:
                sname = f"samples_{overlay.detector}_{hypothesis.value}.csv"
                save_samples(overlay.empirical, out_dir / sname)
                outputs.append(sname)
            overlays.append(overlay)
    with (out_dir / "ks_summary.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["detector", "hypothesis", "ks", "n_trials"])
        for overlay in overlays:
            writer.writerow([overlay.detector, overlay.hypothesis.value,
                             repr(float(overlay.ks)), exp.n_trials])
    outputs.append("ks_summary.csv")
    for overlay in overlays:
        print(f"ks {overlay.detector} {overlay.hypothesis.value}: {overlay.ks:.5f}")
    if plots:
        outputs.extend(_plot_overlays(out_dir, overlays))
    return outputs


def _run_roc(scenario: Scenario, out_dir: Path, workers: int, plots: bool) -> list[str]:
    exp = scenario.config.experiment
    grid = default_pfa_grid(exp.pfa_min, exp.pfa_max, exp.pfa_points)
    curves = [analytic_roc(spec, scenario.covset, scenario.signal, grid,
                           scenario=scenario.config.label)
              for spec in scenario.detectors]
    write_roc_csv(out_dir / "roc.csv", curves)
    outputs = ["roc.csv"]
    if plots:
        outputs.extend(_plot_roc(out_dir, curves))
    return outputs


def _run_sweep(scenario: Scenario, out_dir: Path, workers: int, plots: bool) -> list[str]:
    exp = scenario.config.experiment
    sweep = theta_sweep(scenario.config.detectors, scenario.covset, scenario.params,
                        exp.theta_k_grid, exp.fixed_pfa)
    write_sweep_csv(out_dir / "sweep.csv", sweep)
    outputs = ["sweep.csv"]
    if plots:
        outputs.extend(_plot_sweep(out_dir, sweep))
    return outputs


def _parse_float_list(raw: str, flag: str) -> list[float]:
    try:
        return [float(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(flag, f"expected comma-separated numbers, got {raw!r}")


def _run_gx2(args) -> int:
    weights = _parse_float_list(args.weights, "--weights")
    dofs = _parse_float_list(args.dofs, "--dofs")
    if args.noncentralities is None:
        deltas = [0.0] * len(weights)
    else:
        deltas = _parse_float_list(args.noncentralities, "--noncentralities")
    if not len(weights) == len(dofs) == len(deltas):
        raise ConfigError("gx2", "weights, dofs and noncentralities must have equal length")
    terms = tuple(Gx2Term(weight=w, dof=int(round(d)), noncentrality=nc)
                  for w, d, nc in zip(weights, dofs, deltas))
    params = Gx2Params(terms=terms)
    if args.x is not None:
        print(repr(gx2_cdf(params, args.x)))
    else:
        print(repr(gx2_quantile(params, args.p)))
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "gx2":
            return _run_gx2(args)
        if args.command == "validate":
            load_config(args.config, args.overrides)
            print("config ok")
            return 0
        scenario, out_dir = _load_scenario(args)
        out_dir.mkdir(parents=True, exist_ok=True)
        runner = {"dist": _run_dist, "roc": _run_roc, "sweep": _run_sweep}[args.command]
        outputs = runner(scenario, out_dir, args.workers, not args.no_plots)
        _write_manifest(out_dir, scenario, args.command, args.workers, outputs)
        print(f"wrote {len(outputs) + 1} files to {out_dir}")
        return 0
    except QuadratureFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (TcadetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
