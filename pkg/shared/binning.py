"""
Equal-width per-phase histograms of quadrature data, the Scott and Leonhardt
bin-width rules, and the mean-photon-number estimator.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np

from shared.errors import DegenerateWidthError, InputError
from shared.models import PhotonSource, WidthKind, WidthStrategy
from shared.sampler import QuadratureDataset

logger = logging.getLogger(__name__)

SCOTT_FACTOR = 3.5


@dataclass
class PhaseHistogram:
    theta: float
    edges: np.ndarray
    counts: np.ndarray
    n_samples: int

    @property
    def width(self) -> float:
        return float(self.edges[1] - self.edges[0])

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def n_bins(self) -> int:
        return self.counts.size


def scott_width(samples: np.ndarray) -> float:
    """h = 3.5 * sigma * s^(-1/3) with the unbiased sample standard deviation."""
    samples = np.asarray(samples, dtype=float)
    if samples.size < 2:
        raise InputError(f"Scott's rule needs at least 2 samples, got {samples.size}")
    if np.ptp(samples) == 0.0:
        raise DegenerateWidthError("all samples are identical; Scott width is zero")
    sigma = float(np.std(samples, ddof=1))
    return SCOTT_FACTOR * sigma * samples.size ** (-1.0 / 3.0)


def leonhardt_width(n: float) -> float:
    """q_n / 2 = pi / (2 sqrt(2n + 1))."""
    if not n >= 0:
        raise InputError(f"photon number must be >= 0, got {n}")
    return float(np.pi / (2.0 * np.sqrt(2.0 * n + 1.0)))


def estimate_mean_photon(data: Union[QuadratureDataset, np.ndarray]) -> float:
    """(1/N) sum x_i^2 - 1/2; valid when the phases are uniform over [0, pi)."""
    xs = data.xs if isinstance(data, QuadratureDataset) else np.asarray(data, dtype=float)
    if xs.size < 1:
        raise InputError("need at least one quadrature sample")
    return float(np.mean(xs * xs) - 0.5)


def histogram(samples: np.ndarray, width: float, theta: float = 0.0, anchor: str = "minimum") -> PhaseHistogram:
    """
    Contiguous bins of width h anchored at the sample minimum (or on the lattice
    h*Z for anchor="zero"). The maximum sample always lands in the last bin.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size < 1:
        raise InputError("cannot histogram an empty phase")
    if not width > 0:
        raise DegenerateWidthError(f"bin width must be > 0, got {width}")
    lo, hi = float(samples.min()), float(samples.max())
    if anchor == "zero":
        lo = np.floor(lo / width) * width
    elif anchor != "minimum":
        raise InputError(f"unknown bin anchor {anchor!r}")
    n_bins = max(1, int(np.ceil((hi - lo) / width)))
    edges = lo + width * np.arange(n_bins + 1)
    edges[-1] = max(edges[-1], hi)

    index = np.clip(np.searchsorted(edges, samples, side="right") - 1, 0, n_bins - 1)
    counts = np.bincount(index, minlength=n_bins)
    return PhaseHistogram(theta=float(theta), edges=edges, counts=counts, n_samples=int(samples.size))


def global_width(dataset: QuadratureDataset, strategy: WidthStrategy, truncation: Optional[int] = None) -> float:
    """The single width used by fixed and Leonhardt strategies."""
    if strategy.kind == WidthKind.FIXED:
        return float(strategy.width)
    if strategy.kind == WidthKind.LEONHARDT:
        if strategy.n_source == PhotonSource.TRUNCATION:
            if truncation is None:
                if dataset.spec is None:
                    raise InputError("leonhardt:t needs the truncation")
                truncation = dataset.spec.truncation
            return leonhardt_width(truncation)
        estimate = estimate_mean_photon(dataset)
        if estimate < 0:
            logger.info("mean photon estimate %.4f is negative; using 0 for Leonhardt's width", estimate)
        return leonhardt_width(max(estimate, 0.0))
    raise InputError(f"{strategy.label} has no global width")


def build_histograms(
    dataset: QuadratureDataset,
    strategy: WidthStrategy,
    truncation: Optional[int] = None,
    anchor: str = "minimum",
) -> List[PhaseHistogram]:
    """Per-phase histograms; Scott widths are per phase, fixed and Leonhardt widths are global."""
    groups = dataset.by_phase()
    width = None if strategy.kind == WidthKind.SCOTT else global_width(dataset, strategy, truncation)
    histograms = []
    for theta, samples in groups:
        h = scott_width(samples) if width is None else width
        histograms.append(histogram(samples, h, theta, anchor))
    return histograms


def realized_widths(histograms: List[PhaseHistogram]) -> np.ndarray:
    return np.array([h.width for h in histograms])
