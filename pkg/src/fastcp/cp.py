"""
CP models and the direct decomposition engines.

The engines (ALS, MU, HALS) all work from the same two gradient terms per
mode, ``YB = unfold(Y, n) @ B`` and ``BtB = B.T @ B``, and share one sweep
loop. FFCP plugs a compressed computation of the same terms into that loop.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .rand import STREAM_INIT, as_seed, gaussian_matrix
from .tensor import (
    as_tensor,
    fold,
    frobenius_norm,
    gram_hadamard,
    khatri_rao_except,
    unfold,
)

_log = logging.getLogger(__name__)

#: Denominator guard of the multiplicative update.
MU_EPS = 1e-16

#: HALS skips a column whose Gram diagonal entry falls below this.
HALS_MIN_DIAG = 1e-15

#: Ridge added to a singular normal-equation matrix, relative to its trace.
RIDGE = 1e-12


@dataclass
class CpModel:
    """
    Factor matrices of a CP model ``[[A^(1), ..., A^(N)]]``.

    Factor n is I_n x R. After an engine finishes, every factor except the
    last has unit-norm columns and the column weights live in the last one.
    """

    factors: List[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        self.factors = [np.asarray(A, dtype=np.float64) for A in self.factors]
        if not self.factors:
            raise ValueError("A CP model needs at least one factor")
        if any(A.ndim != 2 for A in self.factors):
            raise ValueError("CP factors must be matrices")
        ranks = {A.shape[1] for A in self.factors}
        if len(ranks) != 1 or 0 in ranks:
            raise ValueError(f"CP factors must share a positive column count, got {sorted(ranks)}")

    @property
    def order(self) -> int:
        return len(self.factors)

    @property
    def rank(self) -> int:
        return self.factors[0].shape[1]

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(A.shape[0] for A in self.factors)

    def full(self) -> np.ndarray:
        return cp_reconstruct(self)

    def normalized(self) -> "CpModel":
        """Unit-norm columns in all factors but the last, which absorbs the weights."""
        factors = [A.copy() for A in self.factors]
        weights = np.ones(self.rank)
        for n in range(self.order - 1):
            norms = np.linalg.norm(factors[n], axis=0)
            nonzero = norms > 0
            factors[n][:, nonzero] /= norms[nonzero]
            weights[nonzero] *= norms[nonzero]
            weights[~nonzero] = 0.0
        factors[-1] = factors[-1] * weights
        return CpModel(factors)


@dataclass(frozen=True)
class StopRule:
    """Sweep budget and fit-change tolerance of an iterative engine."""

    max_iters: int = 1000
    fit_tol: float = 1e-6

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")
        if self.fit_tol < 0:
            raise ValueError(f"fit_tol must be non-negative, got {self.fit_tol}")


@dataclass(frozen=True)
class SweepRecord:
    """Fit and per-mode update times of one sweep."""

    iteration: int
    fit: float
    mode_times: Tuple[float, ...]


@dataclass
class CpResult:
    model: CpModel
    trace: List[SweepRecord]
    iterations: int
    converged: bool

    @property
    def fit(self) -> float:
        """Fit of the last sweep."""
        return self.trace[-1].fit if self.trace else float("nan")


def _check_factors(factors: Sequence[np.ndarray], shape: Optional[Sequence[int]] = None) -> None:
    R = factors[0].shape[1]
    if any(A.ndim != 2 or A.shape[1] != R for A in factors):
        raise ValueError("Factors must be matrices sharing one column count")
    if shape is not None:
        if len(factors) != len(shape) or any(A.shape[0] != dim for A, dim in zip(factors, shape)):
            raise ValueError(
                f"Factor rows {[A.shape[0] for A in factors]} do not match tensor shape {tuple(shape)}"
            )


def cp_reconstruct(model) -> np.ndarray:
    """
    Full tensor of a CP model: the sum of R outer products.

    Args:
        model: CpModel or a list of factor matrices

    Returns:
        Dense tensor of shape ``(I_1, ..., I_N)``
    """
    factors = model.factors if isinstance(model, CpModel) else [np.asarray(A, dtype=np.float64) for A in model]
    _check_factors(factors)
    shape = tuple(A.shape[0] for A in factors)
    if len(factors) == 1:
        return factors[0].sum(axis=1)
    return fold(factors[0] @ khatri_rao_except(factors, 0).T, 0, shape)


def gradient_terms(Y: np.ndarray, factors: Sequence[np.ndarray], n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    The two terms of the mode-n gradient ``A^(n) @ BtB - YB``.

    Args:
        Y: Data tensor
        factors: Current factor matrices, one per mode
        n: Mode (0-based)

    Returns:
        (YB, BtB) with ``YB = unfold(Y, n) @ B^(n)`` and ``BtB = B^(n).T @ B^(n)``
    """
    _check_factors(factors, np.shape(Y))
    YB = unfold(Y, n) @ khatri_rao_except(factors, n)
    return YB, gram_hadamard(factors, skip=n)


def objective(Y: np.ndarray, factors: Sequence[np.ndarray]) -> float:
    """Least-squares objective ``0.5 * ||Y - [[A]]||_F^2``."""
    _check_factors(factors, np.shape(Y))
    return 0.5 * frobenius_norm(np.asarray(Y) - cp_reconstruct(list(factors))) ** 2


def gram_fit(norm_sq: float, A: np.ndarray, YB: np.ndarray, BtB: np.ndarray) -> float:
    """
    Fit from the gradient terms of the last updated mode.

    ``||Y - [[A]]||^2 = ||Y||^2 - 2 <A, YB> + <A.T A, BtB>``, so no tensor
    has to be rebuilt.
    """
    residual_sq = norm_sq - 2.0 * np.sum(A * YB) + np.sum((A.T @ A) * BtB)
    return 1.0 - np.sqrt(max(residual_sq, 0.0) / norm_sq)


def als_update(A: np.ndarray, YB: np.ndarray, BtB: np.ndarray) -> np.ndarray:
    """Least-squares update ``A = YB @ inv(BtB)``, ridged when BtB is singular."""
    try:
        return scipy.linalg.cho_solve(scipy.linalg.cho_factor(BtB), YB.T).T
    except scipy.linalg.LinAlgError:
        ridge = RIDGE * np.trace(BtB)
        _log.warning("Singular normal equations; adding ridge %.3g", ridge)
        if ridge <= 0.0:
            return scipy.linalg.lstsq(BtB, YB.T)[0].T
        return scipy.linalg.solve(BtB + ridge * np.eye(BtB.shape[0]), YB.T, assume_a="sym").T


def mu_update(A: np.ndarray, YB: np.ndarray, BtB: np.ndarray) -> np.ndarray:
    """Multiplicative update with a projected numerator; keeps A nonnegative."""
    return A * np.maximum(YB, 0.0) / (A @ BtB + MU_EPS)


def hals_update(A: np.ndarray, YB: np.ndarray, BtB: np.ndarray, project: bool = True) -> np.ndarray:
    """
    One HALS pass over the columns of A.

    Column r moves by ``(q_r - A t_r) / t_rr`` with Q = YB and T = BtB,
    clipped at zero when ``project`` is set. Columns are updated in order and
    each update sees the previous ones.
    """
    A = A.copy()
    for r in range(A.shape[1]):
        t_rr = BtB[r, r]
        if t_rr < HALS_MIN_DIAG:
            _log.debug("Skipping degenerate column %d (t_rr=%.3g)", r, t_rr)
            continue
        column = A[:, r] + (YB[:, r] - A @ BtB[:, r]) / t_rr
        A[:, r] = np.maximum(column, 0.0) if project else column
    return A


ModeTerms = Callable[[List[np.ndarray], int], Tuple[np.ndarray, np.ndarray]]
Update = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def run_sweeps(factors: List[np.ndarray], norm_sq: float, stop: StopRule,
               terms: ModeTerms, update: Update, label: str,
               after_update: Optional[Callable[[int, np.ndarray], None]] = None) -> CpResult:
    """
    Block-coordinate sweep loop shared by every CP engine.

    Each sweep updates the factors in mode order 0..N-1 from
    ``terms(factors, n)``; the fit comes from the terms of the last mode.
    Stops once the fit changes by less than ``stop.fit_tol`` between sweeps.

    Args:
        factors: Initial factors, updated in place
        norm_sq: Squared norm of the tensor being fitted
        stop: Stopping rule
        terms: Returns (YB, BtB) for a mode
        update: Maps (A, YB, BtB) to the new factor
        label: Engine name for log messages
        after_update: Called with (n, new factor) after every update

    Returns:
        Result with the normalized model and the sweep trace
    """
    trace: List[SweepRecord] = []
    previous = None
    converged = False
    iteration = 0
    for iteration in range(1, stop.max_iters + 1):
        mode_times = []
        for n in range(len(factors)):
            start = time.perf_counter()
            YB, BtB = terms(factors, n)
            factors[n] = update(factors[n], YB, BtB)
            if after_update is not None:
                after_update(n, factors[n])
            mode_times.append(time.perf_counter() - start)

        current = gram_fit(norm_sq, factors[-1], YB, BtB)
        trace.append(SweepRecord(iteration, current, tuple(mode_times)))
        _log.debug("%s sweep %d: fit %.10f", label, iteration, current)
        if previous is not None and abs(current - previous) < stop.fit_tol:
            converged = True
            break
        previous = current

    _log.info("%s %s after %d sweeps, fit %.6f", label,
              "converged" if converged else "stopped", iteration, trace[-1].fit)
    return CpResult(CpModel(factors).normalized(), trace, iteration, converged)


def initial_factors(shape: Sequence[int], rank: int, seed, nonneg: bool = False) -> List[np.ndarray]:
    """Standard normal starting factors, or their absolute values for nonnegative engines."""
    seed = as_seed(seed)
    factors = [gaussian_matrix(dim, rank, seed.spawn(STREAM_INIT, n)) for n, dim in enumerate(shape)]
    return [np.abs(A) for A in factors] if nonneg else factors


def _prepare(Y, rank: int, nonneg: bool, label: str) -> Tuple[np.ndarray, float]:
    Y = as_tensor(Y)
    if int(rank) != rank or rank < 1:
        raise ValueError(f"Rank must be a positive integer, got {rank}")
    if nonneg and np.any(Y < 0):
        raise ValueError(f"{label} needs a nonnegative tensor")
    norm_sq = frobenius_norm(Y) ** 2
    if norm_sq == 0.0:
        raise ValueError(f"{label} cannot fit a zero tensor")
    return Y, norm_sq


def _direct_terms(Y: np.ndarray) -> ModeTerms:
    return lambda factors, n: gradient_terms(Y, factors, n)


def cp_als(Y: np.ndarray, rank: int, stop: StopRule = StopRule(), seed=None) -> CpResult:
    """
    CP decomposition by alternating least squares.

    Args:
        Y: Data tensor
        rank: Number of components R
        stop: Stopping rule
        seed: SeedSpec or integer root seed of the initialization

    Returns:
        CpResult with the fit trace against Y
    """
    Y, norm_sq = _prepare(Y, rank, False, "CP-ALS")
    factors = initial_factors(Y.shape, rank, seed)
    return run_sweeps(factors, norm_sq, stop, _direct_terms(Y), als_update, "CP-ALS")


def cp_mu(Y: np.ndarray, rank: int, stop: StopRule = StopRule(), seed=None) -> CpResult:
    """
    Nonnegative CP decomposition by multiplicative updates.

    Raises:
        ValueError: If Y has negative entries
    """
    Y, norm_sq = _prepare(Y, rank, True, "CP-MU")
    factors = initial_factors(Y.shape, rank, seed, nonneg=True)
    return run_sweeps(factors, norm_sq, stop, _direct_terms(Y), mu_update, "CP-MU")


def cp_hals(Y: np.ndarray, rank: int, stop: StopRule = StopRule(), seed=None,
            project: bool = True) -> CpResult:
    """
    CP decomposition by hierarchical ALS.

    Args:
        Y: Data tensor, nonnegative when ``project`` is set
        rank: Number of components R
        stop: Stopping rule
        seed: SeedSpec or integer root seed of the initialization
        project: Clip columns at zero (nonnegative CP); ``False`` gives
            unconstrained HALS

    Raises:
        ValueError: If ``project`` is set and Y has negative entries
    """
    Y, norm_sq = _prepare(Y, rank, project, "CP-HALS")
    factors = initial_factors(Y.shape, rank, seed, nonneg=project)

    def update(A, YB, BtB):
        return hals_update(A, YB, BtB, project=project)

    return run_sweeps(factors, norm_sq, stop, _direct_terms(Y), update, "CP-HALS")
