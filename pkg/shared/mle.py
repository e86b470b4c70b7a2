"""
Maximum-likelihood density-matrix reconstruction.

The engine starts from the maximally mixed state, runs RrhoR iterations for
about (t+1)^2/4 steps, then switches to a regularised gradient ascent over

    rho(A) = (S + A)(S + A)^dag / Tr[(S + A)(S + A)^dag],   S = sqrt(rho),

with Tr(A A^dag) <= u. Both phases stop once the bound
lambda_max(R) - N on L(rho_ML) - L(rho) drops to stop_gap.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from shared.errors import InputError, StagnationError
from shared.fock import hermitize, matrix_sqrt
from shared.models import MLEConfig, ReconstructionMetadata

logger = logging.getLogger(__name__)

MONOTONE_TOL = 1e-9
MIN_DAMPING = 1e-12
MIN_TRUST_RADIUS = 1e-18


@dataclass
class LikelihoodModel:
    """Operators Pi_i with multiplicities f_i (1 per raw sample, the count per bin)."""

    operators: np.ndarray
    multiplicities: np.ndarray

    def __post_init__(self):
        self.operators = np.asarray(self.operators, dtype=complex)
        self.multiplicities = np.asarray(self.multiplicities, dtype=float)
        if self.operators.ndim != 3 or self.operators.shape[1] != self.operators.shape[2]:
            raise InputError(f"operators must have shape (K, d, d), got {self.operators.shape}")
        if self.multiplicities.shape != (self.operators.shape[0],):
            raise InputError("need one multiplicity per operator")
        if self.size == 0:
            raise InputError("likelihood model has no operators")
        if np.any(self.multiplicities < 1):
            raise InputError("multiplicities must be >= 1")
        self._flat = self.operators.reshape(self.size, -1)

    @property
    def size(self) -> int:
        return self.operators.shape[0]

    @property
    def dim(self) -> int:
        return self.operators.shape[1]

    @property
    def total(self) -> float:
        return float(np.sum(self.multiplicities))

    def probabilities(self, rho: np.ndarray) -> np.ndarray:
        """Tr(Pi_i rho) for every operator."""
        return np.real(self._flat @ np.ascontiguousarray(rho.T).reshape(-1))

    def weighted_sum(self, weights: np.ndarray) -> np.ndarray:
        return np.tensordot(weights, self.operators, axes=1)


@dataclass
class ReconstructionResult:
    rho_hat: np.ndarray
    final_log_likelihood: float
    iterations_rpr: int
    iterations_rga: int
    final_gap_bound: float
    wall_time: float
    converged: bool
    log_likelihood_trace: List[float] = field(default_factory=list)
    gap_trace: List[float] = field(default_factory=list)

    def to_metadata(self, n_operators: int = 0) -> ReconstructionMetadata:
        return ReconstructionMetadata(
            iterations_rpr=self.iterations_rpr,
            iterations_rga=self.iterations_rga,
            final_gap=self.final_gap_bound,
            final_log_likelihood=self.final_log_likelihood,
            wall_time_s=self.wall_time,
            converged=self.converged,
            n_operators=n_operators,
        )


def _floored(model: LikelihoodModel, rho: np.ndarray, prob_floor: float) -> Tuple[np.ndarray, np.ndarray]:
    p = model.probabilities(rho)
    return p, np.maximum(p, prob_floor)


def log_likelihood(model: LikelihoodModel, rho: np.ndarray, prob_floor: float = 1e-12) -> float:
    """sum_i f_i ln max(Tr(Pi_i rho), prob_floor)."""
    _, p = _floored(model, rho, prob_floor)
    return float(np.dot(model.multiplicities, np.log(p)))


def r_operator(model: LikelihoodModel, rho: np.ndarray, prob_floor: float = 1e-12) -> np.ndarray:
    """R = sum_i f_i Pi_i / Tr(Pi_i rho)."""
    _, p = _floored(model, rho, prob_floor)
    return hermitize(model.weighted_sum(model.multiplicities / p))


def stopping_gap(model: LikelihoodModel, rho: np.ndarray, prob_floor: float = 1e-12) -> float:
    """lambda_max(R) - N, an upper bound on L(rho_ML) - L(rho) by concavity."""
    return float(np.linalg.eigvalsh(r_operator(model, rho, prob_floor))[-1] - model.total)


def rpr_step(
    model: LikelihoodModel,
    rho: np.ndarray,
    prob_floor: float = 1e-12,
) -> np.ndarray:
    """
    rho' = R rho R / Tr(R rho R).

    The pure step is kept unless the half-damped mixture (rho + rho')/2 is at
    least as good, or the pure step lowers L by more than 1e-9; the damping
    weight is then halved until L stops decreasing.
    """
    base = log_likelihood(model, rho, prob_floor)
    r = r_operator(model, rho, prob_floor)
    full = r @ rho @ r
    full = hermitize(full / np.trace(full).real)
    full_ll = log_likelihood(model, full, prob_floor)

    eps = 0.5
    candidate = (1.0 - eps) * rho + eps * full
    candidate_ll = log_likelihood(model, candidate, prob_floor)
    if full_ll > candidate_ll and full_ll >= base - MONOTONE_TOL:
        return full

    while eps >= MIN_DAMPING:
        if candidate_ll >= base - MONOTONE_TOL:
            logger.debug("damped RrhoR step with eps=%g", eps)
            return hermitize(candidate)
        eps *= 0.5
        candidate = (1.0 - eps) * rho + eps * full
        candidate_ll = log_likelihood(model, candidate, prob_floor)
    return rho


def _dot(a: np.ndarray, b: np.ndarray) -> float:
    """Real inner product Re Tr(a^dag b)."""
    return float(np.vdot(a, b).real)


def tangent(rho: np.ndarray, sqrt_rho: np.ndarray, a: np.ndarray) -> np.ndarray:
    """First-order change of rho(A): S A^dag + A S - rho Tr(S A^dag + A S)."""
    x = sqrt_rho @ a.conj().T + a @ sqrt_rho
    return x - rho * np.trace(x).real


def parametrize(sqrt_rho: np.ndarray, a: np.ndarray) -> np.ndarray:
    """(S + A)(S + A)^dag normalised to unit trace."""
    m = sqrt_rho + a
    sigma = m @ m.conj().T
    return hermitize(sigma / np.trace(sigma).real)


def _pullback(
    model: LikelihoodModel, sqrt_rho: np.ndarray, p: np.ndarray, weights: np.ndarray
) -> np.ndarray:
    """sum_i w_i g_i with g_i = 2 (Pi_i S - Tr(Pi_i rho) S), the gradient of Tr(Pi_i rho(A)) at A = 0."""
    m = model.weighted_sum(weights)
    return 2.0 * (m @ sqrt_rho - float(np.dot(weights, p)) * sqrt_rho)


def log_likelihood_gradient(
    model: LikelihoodModel, rho: np.ndarray, prob_floor: float = 1e-12, sqrt_rho: Optional[np.ndarray] = None
) -> np.ndarray:
    """G with Re Tr(A^dag G) = Tr(R tangent(A)), i.e. 2 (R S - Tr(R rho) S)."""
    s = matrix_sqrt(rho) if sqrt_rho is None else sqrt_rho
    p, pf = _floored(model, rho, prob_floor)
    return _pullback(model, s, p, model.multiplicities / pf)


def _boundary_step(z: np.ndarray, d: np.ndarray, radius: float) -> float:
    """tau >= 0 with ||z + tau d|| = radius."""
    a = _dot(d, d)
    b = 2.0 * _dot(z, d)
    c = _dot(z, z) - radius * radius
    return (-b + np.sqrt(max(b * b - 4.0 * a * c, 0.0))) / (2.0 * a)


def _steihaug(
    gradient: np.ndarray,
    curvature: Callable[[np.ndarray], np.ndarray],
    radius: float,
    max_iterations: int,
    tolerance: float,
) -> np.ndarray:
    """Steihaug-Toint CG for max <G, z> - 1/2 <z, B z> subject to ||z|| <= radius (B PSD)."""
    z = np.zeros_like(gradient)
    r = gradient.copy()
    d = r.copy()
    rr = _dot(r, r)
    g_norm = np.sqrt(rr)
    if g_norm == 0.0:
        return z
    for _ in range(max_iterations):
        bd = curvature(d)
        dbd = _dot(d, bd)
        if dbd <= 0.0:
            return z + _boundary_step(z, d, radius) * d
        alpha = rr / dbd
        z_next = z + alpha * d
        if np.sqrt(_dot(z_next, z_next)) >= radius:
            return z + _boundary_step(z, d, radius) * d
        z = z_next
        r = r - alpha * bd
        rr_next = _dot(r, r)
        if np.sqrt(rr_next) <= tolerance * g_norm:
            return z
        d = r + (rr_next / rr) * d
        rr = rr_next
    return z


def rga_step(
    model: LikelihoodModel,
    rho: np.ndarray,
    u: float,
    config: Optional[MLEConfig] = None,
) -> Tuple[np.ndarray, bool, float]:
    """
    One trust-region step of the regularised gradient ascent.

    A maximises the Gauss-Newton model
    <G, A> - 1/2 sum_i f_i Tr(Pi_i dA)^2 / p_i^2 over Tr(A A^dag) <= u.
    Returns (rho', accepted, new u); a rejected step leaves rho unchanged.
    """
    config = config or MLEConfig()
    if u < MIN_TRUST_RADIUS:
        raise StagnationError(f"trust radius underflow (u={u:.3e})")
    floor = config.prob_floor
    s = matrix_sqrt(rho)
    p, pf = _floored(model, rho, floor)
    f = model.multiplicities
    gradient = _pullback(model, s, p, f / pf)

    def curvature(direction: np.ndarray) -> np.ndarray:
        j = model.probabilities(tangent(rho, s, direction))
        return _pullback(model, s, p, f * j / (pf * pf))

    a = _steihaug(gradient, curvature, np.sqrt(u), config.cg_iterations_for(model.dim), config.cg_tolerance)
    candidate = parametrize(s, a)
    if log_likelihood(model, candidate, floor) < log_likelihood(model, rho, floor):
        return rho, False, u * config.trust_shrink
    return candidate, True, min(u * config.trust_grow, config.trust_radius_max)


def reconstruct(model: LikelihoodModel, config: Optional[MLEConfig] = None) -> ReconstructionResult:
    config = config or MLEConfig()
    start = time.perf_counter()
    floor = config.prob_floor
    dim = model.dim

    rho = np.eye(dim, dtype=complex) / dim
    gap = stopping_gap(model, rho, floor)
    ll_trace = [log_likelihood(model, rho, floor)]
    gap_trace = [gap]
    n_rpr = 0
    n_rga = 0

    rpr_budget = min(config.rpr_iterations_for(dim), config.max_iterations)
    while n_rpr < rpr_budget and gap > config.stop_gap:
        rho = rpr_step(model, rho, floor)
        n_rpr += 1
        gap = stopping_gap(model, rho, floor)
        ll_trace.append(log_likelihood(model, rho, floor))
        gap_trace.append(gap)
        logger.debug("RrhoR %d: L=%.6f gap=%.4g", n_rpr, ll_trace[-1], gap)

    u = config.trust_radius_init
    while gap > config.stop_gap and n_rpr + n_rga < config.max_iterations:
        try:
            candidate, accepted, u = rga_step(model, rho, u, config)
        except StagnationError:
            logger.debug("trust region stagnated; falling back to one RrhoR step")
            rho = rpr_step(model, rho, floor)
            n_rpr += 1
            u = config.trust_radius_init
            accepted, candidate = True, rho
        else:
            n_rga += 1
        if accepted:
            rho = candidate
            gap = stopping_gap(model, rho, floor)
            ll_trace.append(log_likelihood(model, rho, floor))
            gap_trace.append(gap)
            logger.debug("RGA %d: L=%.6f gap=%.4g u=%.3g", n_rga, ll_trace[-1], gap, u)

    converged = gap <= config.stop_gap
    if not converged:
        logger.warning(
            "reconstruction stopped after %d iterations with gap bound %.4g > %.4g",
            n_rpr + n_rga, gap, config.stop_gap,
        )
    return ReconstructionResult(
        rho_hat=rho,
        final_log_likelihood=ll_trace[-1],
        iterations_rpr=n_rpr,
        iterations_rga=n_rga,
        final_gap_bound=gap,
        wall_time=time.perf_counter() - start,
        converged=converged,
        log_likelihood_trace=ll_trace,
        gap_trace=gap_trace,
    )
