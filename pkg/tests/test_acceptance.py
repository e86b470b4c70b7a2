"""Desk-scale replication of the published trends; run with --runslow."""

import numpy as np
import pytest

from shared.binning import build_histograms, estimate_mean_photon, realized_widths
from shared.experiment import run_sweep, simulate
from shared.models import ExperimentConfig, WidthStrategy

pytestmark = pytest.mark.slow

REPETITIONS = 20
CAT_1 = {"kind": "cat", "truncation": 10, "alpha": 1.0}
CAT_2 = {"kind": "cat", "truncation": 15, "alpha": 2.0}
SQUEEZED = {"kind": "squeezed_vacuum", "truncation": 10, "variance_ratio": 0.75}
ATTENUATION = 0.9 * 0.95


def config_for(state, sweep=(), repetitions=REPETITIONS, **extra):
    return ExperimentConfig(
        state=state,
        phases=max(20, state["truncation"] + 1),
        samples=20000,
        eta=0.9,
        repetitions=repetitions,
        sweep=list(sweep),
        master_seed=2024,
        **extra,
    )


def fixed(mode, width):
    return {"mode": mode, "strategy": {"kind": "fixed", "width": width}}


def mean_scott_width(state, seeds=REPETITIONS):
    config = config_for(state)
    widths = []
    for repetition in range(seeds):
        dataset = simulate(config, repetition)
        widths.append(np.mean(realized_widths(build_histograms(dataset, WidthStrategy.parse("scott")))))
    return float(np.mean(widths))


@pytest.mark.parametrize("state, expected, tolerance", [
    (CAT_1, 0.35, 0.03),
    (CAT_2, 0.64, 0.05),
    (SQUEEZED, 0.25, 0.03),
])
def test_scott_mean_widths(state, expected, tolerance):
    assert mean_scott_width(state) == pytest.approx(expected, abs=tolerance)


@pytest.mark.parametrize("state, pure_mean", [
    (CAT_1, np.tanh(1.0)),
    (CAT_2, 4 * np.tanh(4.0)),
    (SQUEEZED, np.sinh(0.5 * np.log(4 / 3)) ** 2),
])
def test_photon_number_estimator_is_consistent(state, pure_mean):
    config = config_for(state)
    estimates = [estimate_mean_photon(simulate(config, repetition)) for repetition in range(REPETITIONS)]
    standard_error = np.std(estimates, ddof=1) / np.sqrt(REPETITIONS)
    assert abs(np.mean(estimates) - ATTENUATION * pure_mean) < 3 * standard_error


def test_fock_strategy_contrast():
    scott, leonhardt = {}, {}
    for n in (4, 10):
        config = config_for({"kind": "fock", "truncation": 14, "n": n})
        scott_widths, leonhardt_widths = [], []
        for repetition in range(REPETITIONS):
            dataset = simulate(config, repetition)
            scott_widths.append(np.mean(realized_widths(build_histograms(dataset, WidthStrategy.parse("scott")))))
            leonhardt_widths.append(realized_widths(build_histograms(dataset, WidthStrategy.parse("leonhardt:mean")))[0])
        scott[n], leonhardt[n] = np.mean(scott_widths), np.mean(leonhardt_widths)
    assert scott[10] > scott[4]
    assert leonhardt[10] < leonhardt[4]
    assert scott[4] == pytest.approx(0.69, abs=0.08)
    assert scott[10] == pytest.approx(1.05, abs=0.08)


@pytest.fixture(scope="module")
def cat_sweep():
    sweep = [
        {"mode": "raw"},
        fixed("center", 0.05),
        fixed("center", 0.2),
        fixed("center", 0.34),
        fixed("center", 0.7),
        fixed("center", 1.05),
        fixed("center", 1.0),
        fixed("integral", 1.0),
    ]
    report = run_sweep(config_for(CAT_1, sweep))
    assert report.failed == 0
    return {(s.mode.value, s.strategy): s for s in report.summaries}


def test_raw_fidelity(cat_sweep):
    assert 0.97 <= cat_sweep[("raw", "none")].mean_fidelity <= 1.0


def test_fine_bins_cost_little_fidelity(cat_sweep):
    raw = cat_sweep[("raw", "none")].mean_fidelity
    assert abs(cat_sweep[("center", "fixed:0.34")].mean_fidelity - raw) < 0.01


def test_integration_helps_wide_bins(cat_sweep):
    center = cat_sweep[("center", "fixed:1")]
    integral = cat_sweep[("integral", "fixed:1")]
    standard_error = np.sqrt((center.std_fidelity ** 2 + integral.std_fidelity ** 2) / REPETITIONS)
    assert integral.mean_fidelity - center.mean_fidelity > standard_error


def test_fidelity_falls_with_width(cat_sweep):
    fidelities = [cat_sweep[("center", f"fixed:{h:g}")].mean_fidelity for h in (0.05, 0.2, 0.34, 0.7, 1.05)]
    for wider, narrower in zip(fidelities[1:], fidelities[:-1]):
        assert wider <= narrower + 0.003


def test_binning_speeds_up_reconstruction(cat_sweep):
    assert cat_sweep[("integral", "fixed:1")].mean_time_s < 0.5 * cat_sweep[("raw", "none")].mean_time_s


def test_small_cat_reconstructs_better_than_large_cat():
    point = [fixed("center", 0.3)]
    small = run_sweep(config_for({**CAT_1, "truncation": 15}, point)).summaries[0]
    large = run_sweep(config_for(CAT_2, point)).summaries[0]
    assert small.mean_fidelity > large.mean_fidelity
