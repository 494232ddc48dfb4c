import dataclasses

import numpy as np
import pytest

import tcadet as t
from tcadet.config import saturating_snr_db
from tcadet.detectors import DetectorKind, DetectorRequest
from tcadet.errors import DegenerateSignal
from tcadet.experiments import (analytic_roc, default_pfa_grid, detector_law,
                                distribution_overlay, theta_sweep, write_overlay_csv,
                                write_roc_csv, write_sweep_csv)
from tcadet.montecarlo import Hypothesis


@pytest.fixture(scope="module")
def small_scenario():
    grid = t.SamplingGrid.from_band(5, 3, 2, 20e9, 30e9, 0.005)
    covset = t.factor(t.build_synthetic_covariance(grid, t.CouplingPreset.tight()))
    params = t.SignalModelParams(theta_k=0.2, theta_t=0.4, target_snr_db=3.0,
                                 channel=t.ChannelModel.steering())
    signal = t.synthesize_signal(params, grid, covset)
    return grid, covset, params, signal


class TestAnalyticRoc:
    def test_zero_signal_chance_line(self, small_scenario):
        grid, covset, _, _ = small_scenario
        zero = t.SignalGrid(grid=grid, values=np.zeros((5, 3, 2), dtype=complex))
        pfa = np.array([1e-4, 1e-2, 0.1, 0.4])
        for spec in (t.ma_detector(covset, 2), t.constant_detector(covset),
                     t.rapid_detector(covset)):
            curve = analytic_roc(spec, covset, zero, pfa)
            np.testing.assert_allclose(curve.pd, pfa, atol=1e-8)

    def test_upper_matches_closed_form(self, small_scenario):
        _, covset, _, signal = small_scenario
        spec = t.upper_detector(covset, signal)
        pfa = np.array([1e-6, 1e-3, 0.05, 0.5])
        curve = analytic_roc(spec, covset, signal, pfa)
        law = t.upper_distribution(covset, signal)
        expected = [t.upper_pd_closed_form(p, law.h1) for p in pfa]
        np.testing.assert_allclose(curve.pd, expected, atol=1e-9)

    def test_pd_dominates_pfa_with_signal(self, small_scenario):
        _, covset, _, signal = small_scenario
        pfa = np.array([1e-4, 1e-2, 0.1, 0.4])
        for spec in (t.ma_detector(covset, 2), t.constant_detector(covset),
                     t.rapid_detector(covset)):
            curve = analytic_roc(spec, covset, signal, pfa)
            assert np.all(curve.pd >= curve.pfa - 1e-9)

    def test_roc_monotone(self, small_scenario):
        _, covset, _, signal = small_scenario
        curve = analytic_roc(t.ma_detector(covset, 2), covset, signal, default_pfa_grid(points=15))
        assert np.all(np.diff(curve.pd) >= -1e-9)

    def test_threshold_consistency(self, small_scenario):
        _, covset, _, _ = small_scenario
        law = detector_law(t.rapid_detector(covset), covset, None)
        for pfa in (1e-6, 1e-3, 0.05, 0.3):
            threshold = t.gx2_quantile(law, 1.0 - pfa)
            assert 1.0 - t.gx2_cdf(law, threshold) == pytest.approx(pfa, abs=1e-8)

    def test_upper_needs_signal(self, small_scenario):
        grid, covset, _, _ = small_scenario
        zero = t.SignalGrid(grid=grid, values=np.zeros((5, 3, 2), dtype=complex))
        spec = t.upper_detector(covset, zero)
        with pytest.raises(DegenerateSignal):
            analytic_roc(spec, covset, zero, np.array([0.1]))

    def test_bad_grid_rejected(self, small_scenario):
        _, covset, _, signal = small_scenario
        spec = t.rapid_detector(covset)
        with pytest.raises(ValueError):
            analytic_roc(spec, covset, signal, np.array([0.5, 0.1]))
        with pytest.raises(ValueError):
            analytic_roc(spec, covset, signal, np.array([0.0, 0.1]))


class TestThetaSweep:
    def test_rapid_is_flat(self, small_scenario):
        _, covset, params, _ = small_scenario
        sweep = theta_sweep([DetectorRequest(DetectorKind.RAPID)], covset, params,
                            [0.0, 0.25, 0.5, 1.0], 1e-4)
        assert np.ptp(sweep.pd["rapid"]) < 1e-9

    def test_constant_peaks_at_zero_for_flat_channel(self, tmp_path, small_scenario):
        grid, covset, params, _ = small_scenario
        # Frequency-flat channel from file: h_k identical across k.
        path = tmp_path / "chan.txt"
        row = " ".join(["1+0j"] * grid.N_R)
        path.write_text(f"{grid.K} {grid.N_R}\n" + "\n".join([row] * grid.K) + "\n")
        flat = dataclasses.replace(params, channel=t.ChannelModel.from_file(path))
        thetas = [0.0, 0.2, 0.5, 0.8]
        deltas = []
        spec = t.constant_detector(covset)
        for theta in thetas:
            sig = t.synthesize_signal(dataclasses.replace(flat, theta_k=theta), grid, covset)
            deltas.append(t.constant_distribution(spec, covset, sig).terms[0].noncentrality)
        assert np.argmax(deltas) == 0
        sweep = theta_sweep([DetectorRequest(DetectorKind.CONSTANT)], covset, flat, thetas, 1e-4)
        assert np.argmax(sweep.pd["constant"]) == 0

    def test_all_probabilities(self, small_scenario):
        _, covset, params, _ = small_scenario
        requests = [DetectorRequest(DetectorKind.MA, 2), DetectorRequest(DetectorKind.CONSTANT),
                    DetectorRequest(DetectorKind.RAPID), DetectorRequest(DetectorKind.UPPER)]
        sweep = theta_sweep(requests, covset, params, [0.0, 0.5], 1e-3)
        for pd in sweep.pd.values():
            assert np.all((pd >= 0) & (pd <= 1))


class TestOverlay:
    def test_grid_spans_samples_and_ks_small(self, small_scenario):
        _, covset, _, signal = small_scenario
        spec = t.rapid_detector(covset)
        overlay = distribution_overlay(spec, covset, signal, Hypothesis.H1,
                                       n_trials=10_000, master_seed=9, grid_points=201)
        assert overlay.x[0] == overlay.empirical.samples[0]
        assert overlay.x[-1] == overlay.empirical.samples[-1]
        assert overlay.ks < 0.02

    def test_upper_overlay(self, small_scenario):
        _, covset, _, signal = small_scenario
        spec = t.upper_detector(covset, signal)
        for hyp in (Hypothesis.H0, Hypothesis.H1):
            overlay = distribution_overlay(spec, covset, signal, hyp,
                                           n_trials=10_000, master_seed=10)
            assert overlay.ks < 0.02

    def test_constant_h0_overlay_is_coupling_free(self, small_scenario):
        # The null law of the pooled statistic has fixed degrees of freedom;
        # both coupling presets must match the same analytic CDF.
        grid, _, _, signal = small_scenario
        for preset in (t.CouplingPreset.tight(), t.CouplingPreset.weak()):
            covset = t.factor(t.build_synthetic_covariance(grid, preset))
            spec = t.constant_detector(covset)
            law = detector_law(spec, covset, None)
            assert law.terms[0].dof == 2 * grid.N_R * grid.T
            overlay = distribution_overlay(spec, covset, signal, Hypothesis.H0,
                                           n_trials=10_000, master_seed=11)
            assert overlay.ks < 0.02


class TestCouplingComparison:
    def test_tight_beats_weak_at_reported_snr_gap(self):
        # The shipped ROC pair: tight coupling at its saturation SNR, weak
        # coupling 2.9 dB below it (the reported average-SNR gap at equal
        # total power).
        grid = t.SamplingGrid.from_band(15, 8, 8, 26e9, 30e9, 0.005)
        channel = t.ChannelModel.steering(-1.0)
        pfa = default_pfa_grid(points=9)
        pds = {}
        snr_tc = None
        for name, preset in (("tc", t.CouplingPreset.tight()), ("wc", t.CouplingPreset.weak())):
            covset = t.factor(t.build_synthetic_covariance(grid, preset))
            if name == "tc":
                snr_tc = saturating_snr_db(t.make_channel(grid, channel), covset)
                snr = snr_tc
            else:
                snr = snr_tc - 2.9
            params = t.SignalModelParams(0.1, 0.5, snr, channel)
            signal = t.synthesize_signal(params, grid, covset)
            pds[name] = analytic_roc(t.ma_detector(covset, 2), covset, signal, pfa, name).pd
        assert np.all(pds["tc"] >= pds["wc"])


class TestCsvWriters:
    def test_headers_and_rows(self, tmp_path, small_scenario):
        _, covset, params, signal = small_scenario
        curve = analytic_roc(t.rapid_detector(covset), covset, signal,
                             np.array([0.01, 0.1]), scenario="demo")
        roc_path = tmp_path / "roc.csv"
        write_roc_csv(roc_path, [curve])
        lines = roc_path.read_text().strip().splitlines()
        assert lines[0] == "pfa,pd,detector,scenario"
        assert len(lines) == 3 and lines[1].endswith("rapid,demo")

        sweep = theta_sweep([DetectorRequest(DetectorKind.RAPID)], covset, params,
                            [0.0, 0.5], 1e-3)
        sweep_path = tmp_path / "sweep.csv"
        write_sweep_csv(sweep_path, sweep)
        assert sweep_path.read_text().splitlines()[0] == "theta_k,pd,detector"

        overlay = distribution_overlay(t.rapid_detector(covset), covset, signal,
                                       Hypothesis.H0, n_trials=500, master_seed=1,
                                       grid_points=11)
        overlay_path = tmp_path / "overlay.csv"
        write_overlay_csv(overlay_path, overlay)
        lines = overlay_path.read_text().strip().splitlines()
        assert lines[0] == "x,analytic_cdf,empirical_cdf"
        assert len(lines) == 12
