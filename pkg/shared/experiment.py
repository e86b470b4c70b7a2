"""
Seeded Monte-Carlo sweeps over bin-width strategies and bin modes.

Every (sweep point, repetition) pair is an independent run: simulate a dataset
from the repetition's seed, build the likelihood (raw, center or integral),
reconstruct and score the fidelity against the lossy input state. Aggregates
are fixed-order reductions over the per-run rows, so a report is fully
determined by the master seed.
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from tqdm import tqdm

from shared.binning import PhaseHistogram, build_histograms, estimate_mean_photon, realized_widths
from shared.errors import InputError, TomographyError
from shared.fock import fidelity
from shared.mle import LikelihoodModel, reconstruct
from shared.models import (
    BinMode,
    ExperimentConfig,
    ExperimentReport,
    RunRow,
    SweepPoint,
    SweepSummary,
    WidthStrategy,
)
from shared.povm import DEFAULT_PANEL_WIDTH, OperatorCache, build_bin_operator_set, point_povms
from shared.sampler import PhaseSchedule, QuadratureDataset, generate_dataset
from shared.states import prepare_state
from shared.storage import ResultStore

logger = logging.getLogger(__name__)


def dataset_seed(master_seed: int, repetition: int) -> int:
    """Per-repetition seed; shared by every sweep point so they all see the same data."""
    state = np.random.SeedSequence(entropy=master_seed, spawn_key=(repetition,)).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 32 | int(state[1])


def simulate(config: ExperimentConfig, repetition: int) -> QuadratureDataset:
    schedule = PhaseSchedule(phases=config.phases, samples=config.samples)
    seed = dataset_seed(config.master_seed, repetition)
    return generate_dataset(config.state, schedule, config.eta, seed, repetition)


def likelihood_from_dataset(
    dataset: QuadratureDataset,
    mode: BinMode,
    strategy: Optional[WidthStrategy],
    truncation: int,
    eta: float,
    quadrature_order: Optional[int] = None,
    max_panel_width: float = DEFAULT_PANEL_WIDTH,
    anchor: str = "minimum",
    cache: Optional[OperatorCache] = None,
) -> Tuple[LikelihoodModel, Optional[List[PhaseHistogram]]]:
    """Raw mode gives one point operator per sample; binned modes one operator per non-empty bin."""
    mode = BinMode(mode)
    if mode == BinMode.RAW:
        model = LikelihoodModel(
            operators=point_povms(dataset.xs, dataset.thetas, truncation, eta),
            multiplicities=np.ones(len(dataset)),
        )
        return model, None
    if strategy is None:
        raise InputError(f"mode {mode.value} needs a width strategy")
    histograms = build_histograms(dataset, strategy, truncation, anchor)
    operator_set = build_bin_operator_set(
        histograms,
        mode,
        truncation,
        eta,
        quadrature_order=quadrature_order,
        max_panel_width=max_panel_width,
        cache=cache,
    )
    return operator_set.to_likelihood_model(), histograms


def build_likelihood_model(
    dataset: QuadratureDataset,
    point: SweepPoint,
    config: ExperimentConfig,
    cache: Optional[OperatorCache] = None,
) -> Tuple[LikelihoodModel, Optional[List[PhaseHistogram]]]:
    return likelihood_from_dataset(
        dataset,
        point.mode,
        point.strategy,
        config.truncation,
        config.eta,
        quadrature_order=config.order_for(),
        max_panel_width=config.max_panel_width,
        anchor=config.bin_anchor,
        cache=cache,
    )


def run_single(config: ExperimentConfig, point: Union[SweepPoint, int], repetition: int) -> RunRow:
    """
    One seeded run. The wall time covers histogramming, operator construction
    and the MLE, never the simulation. Non-convergence is recorded in the row.
    """
    if isinstance(point, int):
        if not 0 <= point < len(config.sweep):
            raise InputError(f"sweep index {point} outside 0..{len(config.sweep) - 1}")
        index, point = point, config.sweep[point]
    elif point in config.sweep:
        index = config.sweep.index(point)
    else:
        raise InputError(f"sweep point {point.mode.value}/{point.strategy_label} is not part of the configured sweep")
    if repetition < 0:
        raise InputError(f"repetition must be >= 0, got {repetition}")

    prepared = prepare_state(config.state)
    dataset = simulate(config, repetition)

    start = time.perf_counter()
    model, histograms = build_likelihood_model(dataset, point, config)
    result = reconstruct(model, config.mle)
    elapsed = time.perf_counter() - start

    row = RunRow(
        sweep_index=index,
        strategy=point.strategy_label,
        mode=point.mode,
        repetition=repetition,
        seed=dataset.seed,
        fidelity=fidelity(result.rho_hat, prepared.rho_lossy),
        converged=result.converged,
        wall_time_s=elapsed,
        mean_width=float(np.mean(realized_widths(histograms))) if histograms else None,
        nbar_estimate=estimate_mean_photon(dataset),
        iterations_rpr=result.iterations_rpr,
        iterations_rga=result.iterations_rga,
        final_gap=result.final_gap_bound,
        n_operators=model.size,
        leakage=prepared.leakage,
    )
    logger.info(
        "%s %s/%s rep %d: F=%.5f in %.2fs%s",
        config.state.label, row.mode.value, row.strategy, repetition, row.fidelity, elapsed,
        "" if row.converged else " (not converged)",
    )
    return row


def _run_row(args: Tuple[ExperimentConfig, int, int]) -> RunRow:
    config, index, repetition = args
    point = config.sweep[index]
    try:
        return run_single(config, index, repetition)
    except (TomographyError, np.linalg.LinAlgError, FloatingPointError) as exc:
        logger.warning("run %d/%d failed: %s", index, repetition, exc)
        return RunRow(
            sweep_index=index,
            strategy=point.strategy_label,
            mode=point.mode,
            repetition=repetition,
            seed=dataset_seed(config.master_seed, repetition),
            error=f"{type(exc).__name__}: {exc}",
        )


def _mean(values: List[float]) -> float:
    return float(np.mean(values)) if values else math.nan


def summarize(index: int, point: SweepPoint, rows: List[RunRow]) -> SweepSummary:
    """Statistics over the converged, error-free rows of one sweep point."""
    kept = [row for row in rows if row.included]
    fidelities = [row.fidelity for row in kept]
    if len(fidelities) >= 2:
        spread = float(np.std(fidelities, ddof=1))
    else:
        spread = 0.0 if fidelities else math.nan
    widths = [row.mean_width for row in kept if row.mean_width is not None]
    return SweepSummary(
        sweep_index=index,
        strategy=point.strategy_label,
        mode=point.mode,
        width=_mean(widths) if point.mode != BinMode.RAW else None,
        mean_fidelity=_mean(fidelities),
        std_fidelity=spread,
        mean_time_s=_mean([row.wall_time_s for row in kept]),
        mean_nbar=_mean([row.nbar_estimate for row in kept]),
        n_runs=len(rows),
        n_converged=sum(1 for row in rows if row.converged),
        n_failed=sum(1 for row in rows if row.error is not None),
    )


def aggregate(config: ExperimentConfig, runs: List[RunRow]) -> ExperimentReport:
    summaries = []
    for index, point in enumerate(config.sweep):
        rows = sorted(
            (row for row in runs if row.sweep_index == index),
            key=lambda row: row.repetition,
        )
        summaries.append(summarize(index, point, rows))
    return ExperimentReport(config=config, summaries=summaries, runs=runs)


def run_sweep(config: ExperimentConfig) -> ExperimentReport:
    tasks = [
        (config, index, repetition)
        for index in range(len(config.sweep))
        for repetition in range(config.repetitions)
    ]
    logger.info(
        "sweep of %d points x %d repetitions for %s (workers=%d)",
        len(config.sweep), config.repetitions, config.state.label, config.workers,
    )
    if config.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            runs = list(tqdm(pool.map(_run_row, tasks), total=len(tasks), desc="runs"))
    else:
        runs = [_run_row(task) for task in tqdm(tasks, desc="runs")]

    report = aggregate(config, runs)
    if report.failed or report.non_converged:
        logger.warning("%d runs failed, %d did not converge", report.failed, report.non_converged)
    logger.info("sweep finished: %d runs", len(runs))
    return report


def plot_report(report: ExperimentReport, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for mode in (BinMode.CENTER, BinMode.INTEGRAL):
        points = sorted(
            (s for s in report.summaries if s.mode == mode and s.width is not None and not math.isnan(s.width)),
            key=lambda s: s.width,
        )
        if points:
            ax.errorbar(
                [s.width for s in points],
                [s.mean_fidelity for s in points],
                yerr=[s.std_fidelity for s in points],
                marker="o",
                capsize=3,
                label=mode.value,
            )
    for summary in report.summaries:
        if summary.mode == BinMode.RAW and not math.isnan(summary.mean_fidelity):
            ax.axhline(summary.mean_fidelity, color="black", linestyle="--", label="raw")
    ax.set_xlabel("bin width")
    ax.set_ylabel("mean fidelity")
    ax.set_title(report.config.state.label)
    if ax.get_legend_handles_labels()[0]:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def emit_report(report: ExperimentReport, path: Union[str, Path]) -> Path:
    """Write summary.csv, runs.csv, plot.svg and report.json under path."""
    store = ResultStore(path)
    store.save_summary(report.summaries)
    store.save_runs(report.runs)
    plot_report(report, store.root / "plot.svg")
    store.save_report(report)
    logger.info("report written to %s", store.root)
    return store.root
