"""
File persistence for datasets, histograms, density matrices and reports.

Everything is plain CSV plus JSON sidecars; floats are written with 17
significant digits so values read back bit-for-bit.
"""

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from shared.binning import PhaseHistogram
from shared.errors import InputError
from shared.models import ExperimentReport, RunRow, SweepSummary
from shared.sampler import QuadratureDataset

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

FLOAT_FORMAT = "%.17g"
SUMMARY_COLUMNS = ["strategy", "mode", "width", "mean_fidelity", "std_fidelity", "mean_time_s", "mean_nbar"]
RUN_COLUMNS = list(RunRow.model_fields)


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return FLOAT_FORMAT % value
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def write_dataset(dataset: QuadratureDataset, path: PathLike) -> Path:
    path = Path(path)
    np.savetxt(
        path,
        np.column_stack([dataset.thetas, dataset.xs]),
        delimiter=",",
        header="theta,x",
        comments="",
        fmt=FLOAT_FORMAT,
    )
    return path


def read_dataset(path: PathLike) -> QuadratureDataset:
    """Read a `theta,x` CSV; samples are grouped later by their distinct phases."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"dataset {path} does not exist")
    with path.open() as handle:
        header = handle.readline().strip().replace(" ", "")
    if header != "theta,x":
        raise InputError(f"{path}: expected header 'theta,x', got {header!r}")
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if table.shape[0] == 0:
        raise InputError(f"{path} holds no samples")
    if table.shape[1] != 2:
        raise InputError(f"{path}: expected 2 columns, got {table.shape[1]}")
    return QuadratureDataset(thetas=table[:, 0], xs=table[:, 1])


def write_histograms(histograms: Iterable[PhaseHistogram], path: PathLike) -> Path:
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["theta", "edge_low", "edge_high", "count"])
        for hist in histograms:
            for low, high, count in zip(hist.edges[:-1], hist.edges[1:], hist.counts):
                writer.writerow([_cell(float(hist.theta)), _cell(float(low)), _cell(float(high)), int(count)])
    return path


def write_density_matrix(rho: np.ndarray, path: PathLike, metadata: Optional[Dict[str, Any]] = None) -> Path:
    """(t+1) rows of real parts then (t+1) rows of imaginary parts; metadata goes to <stem>.json."""
    path = Path(path)
    np.savetxt(path, np.vstack([rho.real, rho.imag]), delimiter=",", fmt=FLOAT_FORMAT)
    if metadata is not None:
        path.with_suffix(".json").write_text(json.dumps(metadata, indent=2))
    return path


def read_density_matrix(path: PathLike) -> Tuple[np.ndarray, Optional[Dict[str, Any]]]:
    path = Path(path)
    table = np.loadtxt(path, delimiter=",", ndmin=2)
    dim = table.shape[1]
    if table.shape[0] != 2 * dim:
        raise InputError(f"{path}: expected {2 * dim} rows for dimension {dim}, got {table.shape[0]}")
    rho = table[:dim] + 1j * table[dim:]
    sidecar = path.with_suffix(".json")
    metadata = json.loads(sidecar.read_text()) if sidecar.exists() else None
    return rho, metadata


def write_runs(runs: Iterable[RunRow], path: PathLike) -> Path:
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(RUN_COLUMNS)
        for row in runs:
            writer.writerow([_cell(getattr(row, column)) for column in RUN_COLUMNS])
    return path


def read_runs(path: PathLike) -> List[RunRow]:
    with Path(path).open(newline="") as handle:
        records = list(csv.DictReader(handle))
    runs = []
    for record in records:
        runs.append(RunRow(**{key: (value if value != "" else None) for key, value in record.items()}))
    return runs


def write_summary(summaries: Iterable[SweepSummary], path: PathLike) -> Path:
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SUMMARY_COLUMNS)
        for summary in summaries:
            values = []
            for column in SUMMARY_COLUMNS:
                value = getattr(summary, column)
                values.append("nan" if isinstance(value, float) and math.isnan(value) else _cell(value))
            writer.writerow(values)
    return path


class ResultStore:
    """An output directory, created on construction."""

    def __init__(self, root: PathLike = "results"):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def save_dataset(self, dataset: QuadratureDataset, name: str = "dataset.csv") -> Path:
        return write_dataset(dataset, self.root / name)

    def save_histograms(self, histograms: Iterable[PhaseHistogram], name: str = "histograms.csv") -> Path:
        return write_histograms(histograms, self.root / name)

    def save_density_matrix(
        self, rho: np.ndarray, metadata: Optional[Dict[str, Any]] = None, name: str = "rho.csv"
    ) -> Path:
        return write_density_matrix(rho, self.root / name, metadata)

    def save_runs(self, runs: Iterable[RunRow]) -> Path:
        return write_runs(runs, self.root / "runs.csv")

    def save_summary(self, summaries: Iterable[SweepSummary]) -> Path:
        return write_summary(summaries, self.root / "summary.csv")

    def save_report(self, report: ExperimentReport) -> Path:
        path = self.root / "report.json"
        path.write_text(report.model_dump_json(indent=2))
        logger.debug("wrote %s", path)
        return path
