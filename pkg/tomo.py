#!/usr/bin/env python3
"""
tomo - simulate homodyne data and reconstruct states from it.

    tomo run --config experiment.json [--seed S] [--reps R] [--out DIR] [--workers W]
    tomo sample --config experiment.json [--seed S] [--rep R] --out data.csv
    tomo reconstruct --data data.csv --mode integral --strategy scott --truncation 10 --eta 0.9
    tomo estimate-nbar --data data.csv

Exit status: 0 on success, 2 if any reconstruction did not converge, 1 on error.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from shared.binning import estimate_mean_photon, realized_widths
from shared.errors import TomographyError
from shared.experiment import emit_report, likelihood_from_dataset, run_sweep, simulate
from shared.mle import reconstruct
from shared.models import BinMode, ExperimentConfig, MLEConfig, WidthStrategy
from shared.storage import ResultStore, read_dataset, write_dataset

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2


def load_config(path: str, overrides: dict) -> ExperimentConfig:
    config = ExperimentConfig.model_validate_json(Path(path).read_text())
    updates = {key: value for key, value in overrides.items() if value is not None}
    if not updates:
        return config
    return ExperimentConfig.model_validate({**config.model_dump(), **updates})


def cmd_run(args) -> int:
    config = load_config(
        args.config,
        {"master_seed": args.seed, "repetitions": args.reps, "output_path": args.out, "workers": args.workers},
    )
    report = run_sweep(config)
    path = emit_report(report, config.output_path)

    print(f"{'strategy':<16} {'mode':<9} {'width':>8} {'fidelity':>10} {'std':>8} {'time[s]':>9} {'nbar':>8}")
    for s in report.summaries:
        width = "-" if s.width is None else f"{s.width:.4f}"
        print(
            f"{s.strategy:<16} {s.mode.value:<9} {width:>8} {s.mean_fidelity:>10.5f} "
            f"{s.std_fidelity:>8.5f} {s.mean_time_s:>9.3f} {s.mean_nbar:>8.4f}"
        )
    print(f"report written to {path}")

    if report.failed:
        print(f"{report.failed} runs failed", file=sys.stderr)
        return EXIT_ERROR
    if report.non_converged:
        print(f"{report.non_converged} runs did not converge", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_sample(args) -> int:
    config = load_config(args.config, {"master_seed": args.seed})
    dataset = simulate(config, args.rep)
    path = write_dataset(dataset, args.out)
    print(f"{len(dataset)} samples over {config.phases} phases written to {path}")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    dataset = read_dataset(args.data)
    mode = BinMode(args.mode)
    strategy = WidthStrategy.parse(args.strategy) if args.strategy else None
    overrides = {"stop_gap": args.stop_gap, "max_iterations": args.max_iterations}
    mle_config = MLEConfig(**{key: value for key, value in overrides.items() if value is not None})

    model, histograms = likelihood_from_dataset(dataset, mode, strategy, args.truncation, args.eta)
    result = reconstruct(model, mle_config)

    store = ResultStore(args.out)
    metadata = result.to_metadata(model.size).model_dump()
    if histograms:
        metadata["widths"] = realized_widths(histograms).tolist()
        store.save_histograms(histograms)
    path = store.save_density_matrix(result.rho_hat, metadata)

    print(
        f"{mode.value} reconstruction from {len(dataset)} samples ({model.size} operators): "
        f"L={result.final_log_likelihood:.4f} gap={result.final_gap_bound:.4g} "
        f"in {result.wall_time:.2f}s"
    )
    print(f"density matrix written to {path}")
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_estimate_nbar(args) -> int:
    dataset = read_dataset(args.data)
    print(f"{estimate_mean_photon(dataset):.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tomo", description="Homodyne tomography with binned data")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings only")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run a sweep from a JSON experiment config")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--reps", type=int)
    run.add_argument("--out")
    run.add_argument("--workers", type=int)
    run.set_defaults(handler=cmd_run)

    sample = commands.add_parser("sample", help="simulate one dataset to CSV")
    sample.add_argument("--config", required=True)
    sample.add_argument("--seed", type=int)
    sample.add_argument("--rep", type=int, default=0)
    sample.add_argument("--out", required=True)
    sample.set_defaults(handler=cmd_sample)

    rec = commands.add_parser("reconstruct", help="reconstruct a density matrix from a theta,x CSV")
    rec.add_argument("--data", required=True)
    rec.add_argument("--mode", choices=[m.value for m in BinMode], default=BinMode.RAW.value)
    rec.add_argument("--strategy", help="fixed:<h>, scott, leonhardt:t or leonhardt:mean")
    rec.add_argument("--truncation", type=int, required=True)
    rec.add_argument("--eta", type=float, default=0.9)
    rec.add_argument("--stop-gap", type=float)
    rec.add_argument("--max-iterations", type=int)
    rec.add_argument("--out", default="reconstruction")
    rec.set_defaults(handler=cmd_reconstruct)

    nbar = commands.add_parser("estimate-nbar", help="mean photon number of a theta,x CSV")
    nbar.add_argument("--data", required=True)
    nbar.set_defaults(handler=cmd_estimate_nbar)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except (TomographyError, ValidationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
