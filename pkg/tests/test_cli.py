import json

import pytest

import tomo


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps({
        "schema_version": 1,
        "state": {"kind": "squeezed_vacuum", "truncation": 3, "variance_ratio": 0.75},
        "phases": 4,
        "samples": 400,
        "repetitions": 1,
        "sweep": [{"mode": "raw"}, {"mode": "integral", "strategy": {"kind": "leonhardt", "n_source": "truncation"}}],
        "output_path": str(tmp_path / "results"),
    }))
    return path


def test_run_writes_report(config_file, tmp_path, capsys):
    out = tmp_path / "override"
    assert tomo.main(["-q", "run", "--config", str(config_file), "--out", str(out), "--seed", "3"]) == 0
    assert (out / "summary.csv").exists()
    assert "leonhardt:t" in capsys.readouterr().out


def test_sample_then_reconstruct(config_file, tmp_path, capsys):
    data = tmp_path / "data.csv"
    assert tomo.main(["sample", "--config", str(config_file), "--rep", "1", "--out", str(data)]) == 0
    assert tomo.main(["estimate-nbar", "--data", str(data)]) == 0
    out = tmp_path / "rec"
    code = tomo.main([
        "reconstruct", "--data", str(data), "--mode", "center", "--strategy", "scott",
        "--truncation", "3", "--eta", "0.9", "--out", str(out),
    ])
    assert code == 0
    assert (out / "rho.csv").exists()
    assert (out / "histograms.csv").exists()
    metadata = json.loads((out / "rho.json").read_text())
    assert len(metadata["widths"]) == 4


def test_unsupported_schema_version(tmp_path, capsys):
    path = tmp_path / "old.json"
    path.write_text(json.dumps({"schema_version": 2, "state": {"kind": "fock", "truncation": 2, "n": 1}, "phases": 3, "samples": 30}))
    assert tomo.main(["run", "--config", str(path)]) == 1
    assert "schema_version" in capsys.readouterr().err


def test_missing_data_file(tmp_path):
    assert tomo.main(["estimate-nbar", "--data", str(tmp_path / "nope.csv")]) == 1


def test_non_convergence_exit_code(tmp_path):
    data = tmp_path / "data.csv"
    data.write_text("theta,x\n" + "\n".join(f"{0.5 * (i % 3):.1f},{(-1) ** i * 0.1 * i}" for i in range(60)))
    code = tomo.main([
        "reconstruct", "--data", str(data), "--truncation", "2",
        "--stop-gap", "1e-14", "--max-iterations", "1", "--out", str(tmp_path / "rec"),
    ])
    assert code == 2
