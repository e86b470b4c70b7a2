import numpy as np
import pytest
from scipy import stats

from shared.errors import InputError
from shared.models import StateSpec
from shared.sampler import (
    PhaseSchedule,
    QuadratureDataset,
    expected_acceptance,
    generate_dataset,
    phase_rng,
    predicted_density,
    sample_phase,
)
from shared.states import make_cat, make_fock, prepare_state


def test_phase_schedule():
    schedule = PhaseSchedule(phases=20, samples=20000)
    assert schedule.per_phase == 1000
    assert schedule.thetas[1] == pytest.approx(np.pi / 20)
    assert schedule.thetas[-1] < np.pi
    with pytest.raises(InputError):
        PhaseSchedule(phases=3, samples=10)
    with pytest.raises(InputError):
        PhaseSchedule(phases=5, samples=100).check_complete(5)


def test_predicted_density_is_normalised():
    density = predicted_density(make_cat(1.0, 10), 0.7, 0.9)
    nodes, weights = np.polynomial.legendre.leggauss(400)
    assert 15.0 * np.dot(weights, density(15.0 * nodes)) == pytest.approx(1.0, abs=1e-8)


def test_vacuum_density_is_gaussian():
    density = predicted_density(make_fock(0, 4), 1.0, 0.8)
    xs = np.linspace(-3, 3, 13)
    assert np.allclose(density(xs), np.exp(-xs ** 2) / np.sqrt(np.pi))


def test_vacuum_samples_pass_ks_test():
    passed = 0
    for seed in range(100):
        xs = sample_phase(make_fock(0, 3), 0.0, 0.9, 1000, phase_rng(seed, 0, 0))
        if stats.kstest(xs, stats.norm(scale=np.sqrt(0.5)).cdf).pvalue > 0.01:
            passed += 1
    assert passed >= 95


def test_cat_samples_follow_predicted_density():
    rho = make_cat(1.0, 10)
    density = predicted_density(rho, 0.0, 0.9)
    grid = np.linspace(-10, 10, 20001)
    cdf_values = np.concatenate([[0.0], np.cumsum(0.5 * (density(grid[1:]) + density(grid[:-1])) * np.diff(grid))])

    def cdf(x):
        return np.interp(x, grid, cdf_values)

    passed = 0
    for seed in range(20):
        xs = sample_phase(rho, 0.0, 0.9, 1000, phase_rng(seed, 0, 0))
        if stats.kstest(xs, cdf).pvalue > 0.01:
            passed += 1
    assert passed >= 17


def test_sample_phase_count():
    with pytest.raises(InputError):
        sample_phase(make_fock(0, 2), 0.0, 1.0, 0, phase_rng(1, 0, 0))


def test_generate_dataset_is_reproducible():
    spec = StateSpec(kind="fock", truncation=3, n=1)
    schedule = PhaseSchedule(phases=4, samples=400)
    first = generate_dataset(spec, schedule, 0.9, seed=11)
    second = generate_dataset(spec, schedule, 0.9, seed=11)
    other = generate_dataset(spec, schedule, 0.9, seed=11, repetition=1)
    assert len(first) == 400
    assert np.array_equal(first.xs, second.xs)
    assert not np.array_equal(first.xs, other.xs)
    assert np.array_equal(np.unique(first.thetas), schedule.thetas)


def test_generate_dataset_checks_schedule():
    spec = StateSpec(kind="fock", truncation=5, n=1)
    with pytest.raises(InputError):
        generate_dataset(spec, PhaseSchedule(phases=4, samples=400), 0.9, seed=1)


def test_dataset_groups_by_phase():
    dataset = QuadratureDataset(thetas=[0.5, 0.0, 0.5, 0.0], xs=[1.0, 2.0, 3.0, 4.0])
    groups = dataset.by_phase()
    assert [theta for theta, _ in groups] == [0.0, 0.5]
    assert np.array_equal(groups[0][1], [2.0, 4.0])
    with pytest.raises(InputError):
        QuadratureDataset(thetas=[0.0], xs=[1.0, 2.0])


@pytest.mark.parametrize("spec", [
    {"kind": "cat", "truncation": 10, "alpha": 1.0},
    {"kind": "cat", "truncation": 15, "alpha": 2.0},
    {"kind": "squeezed_vacuum", "truncation": 10, "variance_ratio": 0.75},
    {"kind": "fock", "truncation": 14, "n": 4},
    {"kind": "fock", "truncation": 14, "n": 10},
])
def test_acceptance_rate_floor(spec):
    rho = prepare_state(StateSpec(**spec)).rho_lossy
    rates = [expected_acceptance(rho, theta, 0.9) for theta in np.linspace(0, np.pi, 8, endpoint=False)]
    assert min(rates) >= 0.02
