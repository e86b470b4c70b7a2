"""
Quadrature measurement operators.

Point operators give probability densities, bin operators give probabilities.
Detector efficiency eta enters through the dual of the loss channel,
Pi_eta = sum_k E_k(eta)^dag Pi_ideal E_k(eta), so that
Tr(Pi_eta rho) = Tr(Pi_ideal apply_loss(rho, eta)).
"""

import logging
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple

import numpy as np

from shared.errors import InputError
from shared.fock import dimension, rotate_operator, wavefunctions
from shared.models import BinMode
from shared.states import loss_amplitudes

if TYPE_CHECKING:
    from shared.binning import PhaseHistogram
    from shared.mle import LikelihoodModel

logger = logging.getLogger(__name__)

DEFAULT_PANEL_WIDTH = 0.5


def default_order(t: int) -> int:
    return max(20, t + 2)


def tail_extent(t: int) -> float:
    """Beyond this |x| every psi_n with n <= t is negligible."""
    return float(np.sqrt(2 * t + 1) + 10.0)


def efficiency_adjoint(operators: np.ndarray, eta: float) -> np.ndarray:
    """sum_k E_k^dag O E_k for each operator O (leading axes are batch axes)."""
    dim = operators.shape[-1]
    if eta == 1.0:
        return operators
    table = loss_amplitudes(eta, dim - 1)
    out = np.zeros(operators.shape, dtype=complex)
    for k in range(dim):
        weights = np.outer(table[k, k:], table[k, k:])
        out[..., k:, k:] += weights * operators[..., : dim - k, : dim - k]
    return out


def point_povms(xs: np.ndarray, thetas: np.ndarray, t: int, eta: float) -> np.ndarray:
    """Stack of point operators, one per (x, theta) pair; shape (len(xs), t+1, t+1)."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    thetas = np.broadcast_to(np.asarray(thetas, dtype=float), xs.shape)
    n = np.arange(dimension(t))
    u = wavefunctions(xs, t) * np.exp(1j * np.outer(n, thetas))
    ideal = np.einsum("mj,nj->jmn", u, u.conj())
    return efficiency_adjoint(ideal, eta)


def point_povm(x: float, theta: float, t: int, eta: float) -> np.ndarray:
    if not 0.0 < eta <= 1.0:
        raise InputError(f"efficiency must lie in (0, 1], got {eta}")
    return point_povms(np.array([x]), np.array([theta]), t, eta)[0]


def _panel_nodes(
    lows: np.ndarray, highs: np.ndarray, order: int, max_panel_width: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights per bin, shape (bins, panels * order)."""
    ref_nodes, ref_weights = np.polynomial.legendre.leggauss(order)
    widths = highs - lows
    panels = max(1, int(np.ceil(np.max(widths) / max_panel_width - 1e-12)))
    step = widths / panels
    starts = lows[:, None] + step[:, None] * np.arange(panels)[None, :]
    half = 0.5 * step[:, None, None]
    nodes = starts[:, :, None] + half * (ref_nodes[None, None, :] + 1.0)
    weights = half * ref_weights[None, None, :] * np.ones((1, panels, 1))
    bins = lows.shape[0]
    return nodes.reshape(bins, -1), weights.reshape(bins, -1)


def integrated_povms(
    lows: np.ndarray,
    highs: np.ndarray,
    theta: float,
    t: int,
    eta: float,
    quadrature_order: Optional[int] = None,
    max_panel_width: float = DEFAULT_PANEL_WIDTH,
) -> np.ndarray:
    """Bin operators integral_a^b Pi(x|theta) dx for every [low, high) pair at one phase."""
    order = default_order(t) if quadrature_order is None else quadrature_order
    if order < 2:
        raise InputError(f"quadrature order must be >= 2, got {order}")
    lows = np.atleast_1d(np.asarray(lows, dtype=float))
    highs = np.atleast_1d(np.asarray(highs, dtype=float))
    if np.any(highs <= lows):
        raise InputError("every bin needs low < high")
    if lows.size == 0:
        return np.zeros((0, dimension(t), dimension(t)), dtype=complex)
    nodes, weights = _panel_nodes(lows, highs, order, max_panel_width)
    table = wavefunctions(nodes, t)
    ideal = np.einsum("mbq,nbq,bq->bmn", table, table, weights).astype(complex)
    return efficiency_adjoint(rotate_operator(ideal, theta), eta)


def integrated_povm(
    a: float,
    b: float,
    theta: float,
    t: int,
    eta: float,
    quadrature_order: Optional[int] = None,
    max_panel_width: float = DEFAULT_PANEL_WIDTH,
) -> np.ndarray:
    if not a < b:
        raise InputError(f"bin needs a < b, got [{a}, {b})")
    return integrated_povms(
        np.array([a]), np.array([b]), theta, t, eta, quadrature_order, max_panel_width
    )[0]


def center_povms(lows: np.ndarray, highs: np.ndarray, theta: float, t: int, eta: float) -> np.ndarray:
    """Point operator at each bin centre scaled by the bin width (density x width)."""
    lows = np.atleast_1d(np.asarray(lows, dtype=float))
    highs = np.atleast_1d(np.asarray(highs, dtype=float))
    if np.any(highs <= lows):
        raise InputError("every bin needs low < high")
    ops = point_povms(0.5 * (lows + highs), np.full(lows.shape, theta), t, eta)
    return ops * (highs - lows)[:, None, None]


def center_povm_for_bin(a: float, b: float, theta: float, t: int, eta: float) -> np.ndarray:
    if not a < b:
        raise InputError(f"bin needs a < b, got [{a}, {b})")
    return point_povm(0.5 * (a + b), theta, t, eta) * (b - a)


def tail_operators(
    lo: float,
    hi: float,
    theta: float,
    t: int,
    eta: float,
    quadrature_order: Optional[int] = None,
    max_panel_width: float = DEFAULT_PANEL_WIDTH,
) -> Tuple[np.ndarray, np.ndarray]:
    """Operators for (-X_far, lo] and [hi, X_far), completing a bin set that covers [lo, hi)."""
    far = tail_extent(t)
    dim = dimension(t)
    lower = np.zeros((dim, dim), dtype=complex)
    upper = np.zeros((dim, dim), dtype=complex)
    if lo > -far:
        lower = integrated_povm(-far, lo, theta, t, eta, quadrature_order, max_panel_width)
    if hi < far:
        upper = integrated_povm(hi, far, theta, t, eta, quadrature_order, max_panel_width)
    return lower, upper


@dataclass
class PhaseOperators:
    theta: float
    lows: np.ndarray
    highs: np.ndarray
    counts: np.ndarray
    operators: np.ndarray


@dataclass
class BinOperatorSet:
    mode: BinMode
    eta: float
    truncation: int
    phases: List[PhaseOperators] = field(default_factory=list)

    @property
    def n_operators(self) -> int:
        return sum(len(p.counts) for p in self.phases)

    def to_likelihood_model(self) -> "LikelihoodModel":
        from shared.mle import LikelihoodModel

        ops = [p.operators[p.counts > 0] for p in self.phases]
        counts = [p.counts[p.counts > 0] for p in self.phases]
        return LikelihoodModel(
            operators=np.concatenate(ops, axis=0),
            multiplicities=np.concatenate(counts).astype(float),
        )


class OperatorCache:
    """Bin operators keyed by phase, edges and construction parameters; safe across threads."""

    def __init__(self, max_entries: int = 512):
        self.max_entries = max_entries
        self._entries: "OrderedDict[tuple, np.ndarray]" = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, key: tuple) -> Optional[np.ndarray]:
        with self._lock:
            value = self._entries.get(key)
            if value is None:
                self.misses += 1
            else:
                self.hits += 1
                self._entries.move_to_end(key)
            return value

    def put(self, key: tuple, value: np.ndarray) -> None:
        with self._lock:
            self._entries[key] = value
            self._entries.move_to_end(key)
            while len(self._entries) > self.max_entries:
                self._entries.popitem(last=False)

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()
            self.hits = self.misses = 0


OPERATOR_CACHE = OperatorCache()


def build_bin_operator_set(
    histograms: Sequence["PhaseHistogram"],
    mode: BinMode,
    t: int,
    eta: float,
    quadrature_order: Optional[int] = None,
    max_panel_width: float = DEFAULT_PANEL_WIDTH,
    skip_empty: bool = True,
    include_tails: bool = False,
    cache: Optional[OperatorCache] = OPERATOR_CACHE,
) -> BinOperatorSet:
    """
    One operator per bin per phase. Empty bins are skipped unless skip_empty is
    False; include_tails appends the two zero-count tail operators per phase.
    """
    mode = BinMode(mode)
    if mode == BinMode.RAW:
        raise InputError("raw data has no bin operators; use point_povms")
    order = default_order(t) if quadrature_order is None else quadrature_order
    operator_set = BinOperatorSet(mode=mode, eta=eta, truncation=t)

    for hist in histograms:
        lows, highs = hist.edges[:-1], hist.edges[1:]
        counts = np.asarray(hist.counts)
        keep = counts > 0 if skip_empty else np.ones(counts.shape, dtype=bool)
        key = (
            mode.value, t, eta, float(hist.theta), hist.edges.tobytes(),
            keep.tobytes(), order, max_panel_width,
        )
        ops = cache.get(key) if cache is not None else None
        if ops is None:
            if mode == BinMode.CENTER:
                ops = center_povms(lows[keep], highs[keep], hist.theta, t, eta)
            else:
                ops = integrated_povms(lows[keep], highs[keep], hist.theta, t, eta, order, max_panel_width)
            if cache is not None:
                cache.put(key, ops)

        phase = PhaseOperators(
            theta=float(hist.theta),
            lows=lows[keep],
            highs=highs[keep],
            counts=counts[keep],
            operators=ops,
        )
        if include_tails:
            lower, upper = tail_operators(
                hist.edges[0], hist.edges[-1], hist.theta, t, eta, order, max_panel_width
            )
            far = tail_extent(t)
            phase = PhaseOperators(
                theta=phase.theta,
                lows=np.concatenate([[-far], phase.lows, [hist.edges[-1]]]),
                highs=np.concatenate([[hist.edges[0]], phase.highs, [far]]),
                counts=np.concatenate([[0], phase.counts, [0]]),
                operators=np.concatenate([lower[None], ops, upper[None]], axis=0),
            )
        operator_set.phases.append(phase)

    logger.debug("built %d %s bin operators over %d phases", operator_set.n_operators, mode.value, len(histograms))
    return operator_set
