"""
Truncated Fock-space numerics.

Every matrix here lives in span{|0>, ..., |t>} (dimension t+1). Quadratures use
the convention in which the vacuum has variance 1/2, so that
n = (X^2 + P^2 - 1) / 2 and psi_0(x) = pi^(-1/4) exp(-x^2 / 2).
"""

from typing import Tuple, Union

import numpy as np

from shared.errors import DomainError, InputError

ArrayLike = Union[float, np.ndarray]

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
EIGENVALUE_TOL = 1e-10
SQRT_CLIP_TOL = 1e-8


def dimension(t: int) -> int:
    """Hilbert-space dimension for photon-number truncation t."""
    if t < 0:
        raise InputError(f"truncation must be >= 0, got {t}")
    return int(t) + 1


def truncation_of(matrix: np.ndarray) -> int:
    return matrix.shape[0] - 1


def wavefunctions(x: ArrayLike, t: int) -> np.ndarray:
    """
    Harmonic-oscillator wavefunctions psi_0..psi_t evaluated at x.

    Uses the two-term recurrence
    psi_{n+1} = (sqrt(2) x psi_n - sqrt(n) psi_{n-1}) / sqrt(n+1),
    which stays finite where explicit Hermite polynomials overflow.

    Returns shape (t+1,) for scalar x and (t+1, len(x)) for an array.
    """
    dim = dimension(t)
    xs = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xs)):
        raise InputError("quadrature value must be finite")

    table = np.empty((dim,) + xs.shape, dtype=float)
    table[0] = np.pi ** -0.25 * np.exp(-0.5 * xs * xs)
    if dim > 1:
        table[1] = np.sqrt(2.0) * xs * table[0]
    for n in range(1, dim - 1):
        table[n + 1] = (np.sqrt(2.0) * xs * table[n] - np.sqrt(n) * table[n - 1]) / np.sqrt(n + 1)
    return table


def annihilation(t: int) -> np.ndarray:
    dim = dimension(t)
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def number_operator(t: int) -> np.ndarray:
    return np.diag(np.arange(dimension(t), dtype=float)).astype(complex)


def quadrature_operators(t: int) -> Tuple[np.ndarray, np.ndarray]:
    """X = (a + a^dag)/sqrt(2) and P = (a - a^dag)/(i sqrt(2)) in the truncated basis."""
    a = annihilation(t)
    x_op = (a + a.conj().T) / np.sqrt(2.0)
    p_op = (a - a.conj().T) / (1j * np.sqrt(2.0))
    return x_op, p_op


def hermitize(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.conj().T)


def mean_photon_number(rho: np.ndarray) -> float:
    return float(np.real(np.sum(np.arange(rho.shape[0]) * np.diagonal(rho))))


def check_density_matrix(rho: np.ndarray) -> np.ndarray:
    """Raise DomainError unless rho is Hermitian, unit-trace and PSD; returns rho."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InputError(f"density matrix must be square, got shape {rho.shape}")
    asymmetry = np.max(np.abs(rho - rho.conj().T))
    if asymmetry > HERMITIAN_TOL:
        raise DomainError(f"density matrix is not Hermitian (max deviation {asymmetry:.3e})")
    trace = np.trace(rho).real
    if abs(trace - 1.0) > TRACE_TOL:
        raise DomainError(f"density matrix trace is {trace!r}, expected 1")
    smallest = np.linalg.eigvalsh(hermitize(rho))[0]
    if smallest < -EIGENVALUE_TOL:
        raise DomainError(f"density matrix has negative eigenvalue {smallest:.3e}")
    return rho


def matrix_sqrt(matrix: np.ndarray) -> np.ndarray:
    """Principal square root of a Hermitian PSD matrix via eigendecomposition."""
    values, vectors = np.linalg.eigh(hermitize(np.asarray(matrix, dtype=complex)))
    if values[0] < -SQRT_CLIP_TOL:
        raise DomainError(f"matrix is not positive semidefinite (eigenvalue {values[0]:.3e})")
    roots = np.sqrt(np.clip(values, 0.0, None))
    return hermitize((vectors * roots) @ vectors.conj().T)


def fidelity(rho: np.ndarray, rho_true: np.ndarray) -> float:
    """F = Tr sqrt(sqrt(rho) rho_true sqrt(rho))."""
    if rho.shape != rho_true.shape:
        raise InputError(f"dimension mismatch: {rho.shape} vs {rho_true.shape}")
    root = matrix_sqrt(rho)
    values = np.linalg.eigvalsh(hermitize(root @ rho_true @ root))
    return float(np.sum(np.sqrt(np.clip(values, 0.0, None))))


def rotate_operator(op: np.ndarray, theta: float) -> np.ndarray:
    """
    U(theta)^dag op U(theta) with U(theta) = diag(exp(-i n theta)).

    Entry (m, n) picks up exp(i (m - n) theta). Leading batch axes are
    rotated elementwise.
    """
    if not np.isfinite(theta):
        raise InputError("phase must be finite")
    n = np.arange(op.shape[-1])
    phases = np.exp(1j * np.subtract.outer(n, n) * theta)
    return op * phases
