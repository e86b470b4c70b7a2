import json

import numpy as np
import pytest

from shared.binning import histogram
from shared.errors import InputError
from shared.models import BinMode, RunRow, SweepSummary
from shared.sampler import QuadratureDataset
from shared.storage import (
    ResultStore,
    read_dataset,
    read_density_matrix,
    read_runs,
    write_dataset,
    write_density_matrix,
    write_histograms,
    write_runs,
    write_summary,
)


def test_dataset_csv_is_exact(tmp_path, rng):
    dataset = QuadratureDataset(thetas=np.repeat([0.0, np.pi / 3], 5), xs=rng.normal(size=10))
    path = write_dataset(dataset, tmp_path / "data.csv")
    assert path.read_text().splitlines()[0] == "theta,x"
    loaded = read_dataset(path)
    assert np.array_equal(loaded.thetas, dataset.thetas)
    assert np.array_equal(loaded.xs, dataset.xs)


def test_read_dataset_errors(tmp_path):
    with pytest.raises(InputError):
        read_dataset(tmp_path / "missing.csv")
    bad = tmp_path / "bad.csv"
    bad.write_text("phase,value\n0.0,1.0\n")
    with pytest.raises(InputError, match="header"):
        read_dataset(bad)


def test_single_sample_dataset(tmp_path):
    path = tmp_path / "one.csv"
    path.write_text("theta,x\n0.5,-1.25\n")
    loaded = read_dataset(path)
    assert loaded.xs.tolist() == [-1.25]


def test_density_matrix_with_metadata(tmp_path, random_state):
    rho = random_state(4)
    path = write_density_matrix(rho, tmp_path / "rho.csv", {"converged": True})
    assert len(path.read_text().splitlines()) == 8
    loaded, metadata = read_density_matrix(path)
    assert np.array_equal(loaded, rho)
    assert metadata == {"converged": True}
    assert json.loads((tmp_path / "rho.json").read_text())["converged"] is True


def test_histogram_csv(tmp_path):
    hists = [histogram(np.array([0.0, 0.1, 0.6]), 0.25, theta=t) for t in (0.0, 1.0)]
    path = write_histograms(hists, tmp_path / "hist.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "theta,edge_low,edge_high,count"
    assert len(lines) == 1 + sum(h.n_bins for h in hists)


def test_runs_round_trip(tmp_path):
    rows = [
        RunRow(sweep_index=0, strategy="scott", mode=BinMode.INTEGRAL, repetition=3, seed=2 ** 63 + 5,
               fidelity=0.987654321012345, converged=True, wall_time_s=0.25, mean_width=0.351,
               nbar_estimate=0.61, iterations_rpr=30, iterations_rga=12, final_gap=0.04, n_operators=700),
        RunRow(sweep_index=1, strategy="none", mode=BinMode.RAW, repetition=0, seed=1,
               error="SamplerFailure: starved"),
    ]
    loaded = read_runs(write_runs(rows, tmp_path / "runs.csv"))
    assert [row.model_dump() for row in loaded] == [row.model_dump() for row in rows]


def test_summary_nan_is_written(tmp_path):
    summary = SweepSummary(sweep_index=0, strategy="none", mode=BinMode.RAW, width=None,
                           mean_fidelity=float("nan"), std_fidelity=float("nan"), mean_time_s=float("nan"),
                           mean_nbar=float("nan"), n_runs=1, n_converged=0, n_failed=1)
    lines = write_summary([summary], tmp_path / "summary.csv").read_text().splitlines()
    assert lines[1] == "none,raw,,nan,nan,nan,nan"


def test_result_store_creates_directory(tmp_path):
    store = ResultStore(tmp_path / "nested" / "out")
    assert store.root.is_dir()
    path = store.save_dataset(QuadratureDataset(thetas=[0.0], xs=[1.0]))
    assert path.parent == store.root
