"""
Simulated homodyne data: the uniform phase schedule and rejection sampling of
quadrature values from the state's predicted densities.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from shared.errors import InputError, SamplerFailure
from shared.fock import truncation_of, wavefunctions
from shared.models import StateSpec
from shared.states import apply_loss, prepare_state

logger = logging.getLogger(__name__)

ENVELOPE_GRID = 4001
ENVELOPE_SAFETY = 1.1
MAX_PROPOSALS = 10 ** 7
MIN_ACCEPTANCE = 1e-4
MAX_BATCH = 10 ** 6


def sampling_extent(t: int) -> float:
    """X_max = sqrt(2t+1) + 6, the half-width of the proposal interval."""
    return float(np.sqrt(2 * t + 1) + 6.0)


@dataclass(frozen=True)
class PhaseSchedule:
    phases: int = 20
    samples: int = 20000

    def __post_init__(self):
        if self.phases < 1:
            raise InputError(f"need at least one phase, got {self.phases}")
        if self.samples % self.phases:
            raise InputError(f"samples ({self.samples}) must be divisible by phases ({self.phases})")

    @property
    def thetas(self) -> np.ndarray:
        return np.arange(self.phases) * np.pi / self.phases

    @property
    def per_phase(self) -> int:
        return self.samples // self.phases

    def check_complete(self, t: int) -> None:
        if self.phases < t + 1:
            raise InputError(f"{self.phases} phases are not informationally complete for truncation {t}")


@dataclass
class QuadratureDataset:
    thetas: np.ndarray
    xs: np.ndarray
    seed: Optional[int] = None
    repetition: int = 0
    spec: Optional[StateSpec] = None
    eta: Optional[float] = None
    schedule: Optional[PhaseSchedule] = None

    def __post_init__(self):
        self.thetas = np.asarray(self.thetas, dtype=float)
        self.xs = np.asarray(self.xs, dtype=float)
        if self.thetas.shape != self.xs.shape or self.xs.ndim != 1:
            raise InputError("thetas and xs must be 1-D arrays of equal length")

    def __len__(self) -> int:
        return self.xs.size

    def by_phase(self) -> List[Tuple[float, np.ndarray]]:
        """Samples grouped by distinct phase, in ascending phase order."""
        groups = []
        for theta in np.unique(self.thetas):
            groups.append((float(theta), self.xs[self.thetas == theta]))
        return groups


def phase_rng(seed: int, repetition: int, phase_index: int) -> np.random.Generator:
    """Independent stream for one (repetition, phase) pair of a master seed."""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(repetition, phase_index))
    return np.random.default_rng(sequence)


def predicted_density(rho: np.ndarray, theta: float, eta: float) -> Callable[[np.ndarray], np.ndarray]:
    """p(x) = Tr(Pi_eta(x|theta) rho), evaluated through the lossy state."""
    t = truncation_of(rho)
    lossy = apply_loss(rho, eta) if eta != 1.0 else rho
    phase = np.exp(1j * np.arange(t + 1) * theta)

    def density(x):
        u = wavefunctions(x, t) * phase.reshape((-1,) + (1,) * np.ndim(x))
        values = np.real(np.einsum("n...,nm,m...->...", u.conj(), lossy, u))
        return np.clip(values, 0.0, None)

    return density


def rejection_envelope(density: Callable[[np.ndarray], np.ndarray], t: int) -> float:
    """Envelope height: the density maximum over a fine grid on [-X_max, X_max], with a safety margin."""
    bound = sampling_extent(t)
    return ENVELOPE_SAFETY * float(np.max(density(np.linspace(-bound, bound, ENVELOPE_GRID))))


def expected_acceptance(rho: np.ndarray, theta: float, eta: float) -> float:
    """Mean acceptance rate of the rejection sampler, 1 / (2 X_max M)."""
    t = truncation_of(rho)
    return 1.0 / (2.0 * sampling_extent(t) * rejection_envelope(predicted_density(rho, theta, eta), t))


def sample_phase(
    rho: np.ndarray,
    theta: float,
    eta: float,
    count: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Rejection sampling with a uniform proposal on [-X_max, X_max] and a grid-scanned envelope."""
    if count < 1:
        raise InputError(f"sample count must be >= 1, got {count}")
    density = predicted_density(rho, theta, eta)
    t = truncation_of(rho)
    bound = sampling_extent(t)
    envelope = rejection_envelope(density, t)
    if not envelope > 0:
        raise SamplerFailure(f"predicted density vanishes on the grid at theta={theta:.4f}")

    chunks = []
    accepted = 0
    proposals = 0
    batch = max(1024, 4 * count)
    while accepted < count:
        x = rng.uniform(-bound, bound, batch)
        u = rng.uniform(0.0, envelope, batch)
        p = density(x)
        if np.any(p > envelope):
            logger.warning("density exceeds the rejection envelope at theta=%.4f", theta)
        keep = x[u <= p]
        chunks.append(keep)
        accepted += keep.size
        proposals += batch
        rate = accepted / proposals
        if proposals >= MAX_PROPOSALS and rate < MIN_ACCEPTANCE:
            raise SamplerFailure(f"acceptance rate {rate:.2e} after {proposals} proposals at theta={theta:.4f}")
        batch = int(min(MAX_BATCH, max(1024, 1.2 * (count - accepted) / max(rate, MIN_ACCEPTANCE))))

    logger.debug("theta=%.4f: accepted %d of %d proposals", theta, accepted, proposals)
    return np.concatenate(chunks)[:count]


def generate_dataset(
    spec: StateSpec,
    schedule: PhaseSchedule,
    eta: float,
    seed: int,
    repetition: int = 0,
) -> QuadratureDataset:
    """
    N/m samples at each of the m phases. Loss is applied to the state first;
    the detector efficiency is folded into the sampling density.
    """
    schedule.check_complete(spec.truncation)
    prepared = prepare_state(spec)
    xs = []
    for index, theta in enumerate(schedule.thetas):
        rng = phase_rng(seed, repetition, index)
        xs.append(sample_phase(prepared.rho_lossy, theta, eta, schedule.per_phase, rng))
    return QuadratureDataset(
        thetas=np.repeat(schedule.thetas, schedule.per_phase),
        xs=np.concatenate(xs),
        seed=seed,
        repetition=repetition,
        spec=spec,
        eta=eta,
        schedule=schedule,
    )
