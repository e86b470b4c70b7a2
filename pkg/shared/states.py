"""
Test-state families in the truncated number basis, and the photon-loss channel
applied to them before measurement.
"""

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy.special import comb, gammaln

from shared.errors import InputError
from shared.fock import dimension, hermitize, mean_photon_number, rotate_operator
from shared.models import StateKind, StateSpec

logger = logging.getLogger(__name__)

LEAKAGE_WARN = 1e-6


@dataclass(frozen=True)
class PreparedState:
    spec: StateSpec
    rho_pure: np.ndarray
    rho_lossy: np.ndarray
    leakage: float
    analytic_mean_photon: float
    lossy_mean_photon: float


def _pure(amplitudes: np.ndarray) -> np.ndarray:
    amplitudes = amplitudes / np.linalg.norm(amplitudes)
    return np.outer(amplitudes, amplitudes.conj()).astype(complex)


def _cat_amplitudes(alpha: float, t: int) -> Tuple[np.ndarray, float]:
    """Unnormalised even-cat amplitudes alpha^n / sqrt(n!) and the truncated weight fraction."""
    if not alpha > 0:
        raise InputError(f"cat amplitude must be > 0, got {alpha}")
    if t < 2:
        raise InputError(f"cat state needs truncation >= 2, got {t}")
    n = np.arange(dimension(t))
    log_amp = n * np.log(alpha) - 0.5 * gammaln(n + 1)
    amplitudes = np.where(n % 2 == 0, np.exp(log_amp), 0.0)

    # Tail of sum_{even n} alpha^{2n} / n!, relative to cosh(alpha^2).
    tail_n = np.arange(t + 1, t + 2 + int(4 * alpha * alpha) + 60)
    tail_n = tail_n[tail_n % 2 == 0]
    log_terms = 2 * tail_n * np.log(alpha) - gammaln(tail_n + 1)
    log_norm = alpha * alpha + np.log1p(np.exp(-2 * alpha * alpha)) - np.log(2.0)
    leakage = float(np.sum(np.exp(log_terms - log_norm)))
    return amplitudes, leakage


def make_cat(alpha: float, t: int) -> np.ndarray:
    """Even cat |alpha> + |-alpha>, renormalised after truncation at t photons."""
    amplitudes, leakage = _cat_amplitudes(alpha, t)
    if leakage > LEAKAGE_WARN:
        logger.warning("cat(alpha=%g) loses %.3e of its weight above t=%d", alpha, leakage, t)
    return _pure(amplitudes)


def _squeezed_amplitudes(variance_ratio: float, t: int) -> Tuple[np.ndarray, float]:
    if not 0.0 < variance_ratio <= 1.0:
        raise InputError(f"variance ratio must lie in (0, 1], got {variance_ratio}")
    dim = dimension(t)
    amplitudes = np.zeros(dim)
    r = -0.5 * np.log(variance_ratio)
    if r == 0.0:
        amplitudes[0] = 1.0
        return amplitudes, 0.0
    m = np.arange(0, dim, 2) // 2
    log_amp = (
        -0.5 * np.log(np.cosh(r))
        + m * np.log(np.tanh(r))
        + 0.5 * gammaln(2 * m + 1)
        - m * np.log(2.0)
        - gammaln(m + 1)
    )
    amplitudes[0::2] = (-1.0) ** m * np.exp(log_amp)
    leakage = max(0.0, 1.0 - float(np.sum(amplitudes ** 2)))
    return amplitudes, leakage


def make_squeezed_vacuum(variance_ratio: float, t: int, angle: float = 0.0) -> np.ndarray:
    """
    Squeezed vacuum with squeeze parameter r = -ln(variance_ratio) / 2.

    The squeezed axis is X for angle 0; a nonzero angle rotates the state.
    """
    amplitudes, leakage = _squeezed_amplitudes(variance_ratio, t)
    if leakage > LEAKAGE_WARN:
        logger.warning("squeezed vacuum loses %.3e of its weight above t=%d", leakage, t)
    rho = _pure(amplitudes)
    if angle:
        rho = rotate_operator(rho, angle)
    return rho


def make_fock(n: int, t: int) -> np.ndarray:
    dim = dimension(t)
    if not 0 <= n <= t:
        raise InputError(f"fock state n={n} outside 0..{t}")
    rho = np.zeros((dim, dim), dtype=complex)
    rho[n, n] = 1.0
    return rho


def loss_amplitudes(tau: float, t: int) -> np.ndarray:
    """table[k, n] = <n-k|E_k|n> = sqrt(C(n, k) tau^(n-k) (1-tau)^k), zero for k > n."""
    if not 0.0 < tau <= 1.0:
        raise InputError(f"transmissivity must lie in (0, 1], got {tau}")
    dim = dimension(t)
    k, n = np.meshgrid(np.arange(dim), np.arange(dim), indexing="ij")
    valid = k <= n
    table = np.zeros((dim, dim))
    table[valid] = np.sqrt(
        comb(n[valid], k[valid]) * tau ** (n[valid] - k[valid]) * (1.0 - tau) ** k[valid]
    )
    return table


def loss_kraus_operators(tau: float, t: int) -> List[np.ndarray]:
    table = loss_amplitudes(tau, t)
    dim = table.shape[0]
    operators = []
    for k in range(dim):
        op = np.zeros((dim, dim))
        for n in range(k, dim):
            op[n - k, n] = table[k, n]
        operators.append(op)
    return operators


def apply_loss(rho: np.ndarray, tau: float) -> np.ndarray:
    """rho -> sum_k E_k rho E_k^dag for the pure-loss channel of transmissivity tau."""
    dim = rho.shape[-1]
    table = loss_amplitudes(tau, dim - 1)
    out = np.zeros_like(rho, dtype=complex)
    for k in range(dim):
        weights = np.outer(table[k, k:], table[k, k:])
        out[..., : dim - k, : dim - k] += weights * rho[..., k:, k:]
    return hermitize(out) if out.ndim == 2 else out


def analytic_mean_photon(spec: StateSpec) -> float:
    """Closed-form <n> of the untruncated, lossless state."""
    if spec.kind == StateKind.CAT:
        a2 = spec.alpha ** 2
        return float(a2 * np.tanh(a2))
    if spec.kind == StateKind.SQUEEZED_VACUUM:
        r = -0.5 * np.log(spec.variance_ratio)
        return float(np.sinh(r) ** 2)
    return float(spec.n)


def prepare_state(spec: StateSpec) -> PreparedState:
    t = spec.truncation
    if spec.kind == StateKind.CAT:
        rho = make_cat(spec.alpha, t)
        _, leakage = _cat_amplitudes(spec.alpha, t)
    elif spec.kind == StateKind.SQUEEZED_VACUUM:
        rho = make_squeezed_vacuum(spec.variance_ratio, t, spec.squeeze_angle)
        _, leakage = _squeezed_amplitudes(spec.variance_ratio, t)
    else:
        rho = make_fock(spec.n, t)
        leakage = 0.0
    rho_lossy = apply_loss(rho, spec.loss_transmissivity)
    return PreparedState(
        spec=spec,
        rho_pure=rho,
        rho_lossy=rho_lossy,
        leakage=leakage,
        analytic_mean_photon=analytic_mean_photon(spec),
        lossy_mean_photon=mean_photon_number(rho_lossy),
    )
