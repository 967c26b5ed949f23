"""
Flexible fast CP (FFCP): CP decomposition of a Tucker-compressed tensor.

The gradient terms of every mode are computed through the small core and the
projected factors ``V^(p) = U^(p).T @ A^(p)``, so a sweep never touches a
tensor of the original size. Any of the CP update rules can run on top.
"""

import enum
import logging
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .cp import (
    CpModel,
    CpResult,
    StopRule,
    als_update,
    cp_als,
    hals_update,
    initial_factors,
    mu_update,
    run_sweeps,
)
from .tensor import gram_hadamard, multi_ttm
from .tucker import TuckerModel

_log = logging.getLogger(__name__)


class ConstraintKind(enum.Enum):
    NONE = "none"
    NONNEG_MU = "nonneg-mu"
    NONNEG_HALS = "nonneg-hals"
    SPARSE = "sparse"

    @property
    def nonneg(self) -> bool:
        return self in (ConstraintKind.NONNEG_MU, ConstraintKind.NONNEG_HALS)


@dataclass(frozen=True)
class ConstraintSpec:
    """Constraint on the CP factors; ``c`` is the soft-threshold level of SPARSE."""

    kind: ConstraintKind = ConstraintKind.NONE
    c: float = 0.0

    def __post_init__(self):
        if not isinstance(self.kind, ConstraintKind):
            object.__setattr__(self, "kind", ConstraintKind(self.kind))
        if self.c < 0:
            raise ValueError(f"Sparsity level must be non-negative, got {self.c}")


def soft_threshold(A: np.ndarray, c: float) -> np.ndarray:
    """
    Elementwise soft-thresholding operator.

    Maps x to ``x - c`` above c, ``x + c`` below -c and 0 in between.
    """
    if c < 0:
        raise ValueError(f"Threshold must be non-negative, got {c}")
    A = np.asarray(A, dtype=np.float64)
    return np.sign(A) * np.maximum(np.abs(A) - c, 0.0)


def _check_conforming(model: TuckerModel, factors: Sequence[np.ndarray]) -> None:
    if len(factors) != model.order:
        raise ValueError(f"Expected {model.order} factors, got {len(factors)}")
    for n, (A, U) in enumerate(zip(factors, model.factors)):
        if A.ndim != 2 or A.shape[0] != U.shape[0]:
            raise ValueError(f"Factor {n} has {A.shape[0]} rows, Tucker factor has {U.shape[0]}")


def core_contraction(core: np.ndarray, V: Sequence[np.ndarray], n: int) -> np.ndarray:
    """
    ``H = unfold(G, n) @ khatri_rao(V^(p), p != n)``, one column at a time.

    Column r is G contracted with ``v_r^(p)`` along every mode p != n; the
    Khatri-Rao matrix itself is never formed.
    """
    R = V[0].shape[1]
    H = np.empty((core.shape[n], R))
    for r in range(R):
        h = core
        # contract from the highest mode down so lower axis numbers stay put
        for p in reversed(range(core.ndim)):
            if p != n:
                h = np.tensordot(h, V[p][:, r], axes=(p, 0))
        H[:, r] = h
    return H


def ffcp_yb(model: TuckerModel, factors: Sequence[np.ndarray], n: int) -> np.ndarray:
    """
    Compressed approximation of ``unfold(Y, n) @ B^(n)``.

    Args:
        model: Tucker representation of Y
        factors: CP factors conforming to the model's full shape
        n: Mode (0-based)

    Returns:
        ``U^(n) @ H``, exact when Y equals the Tucker model
    """
    _check_conforming(model, factors)
    V = [U.T @ A for U, A in zip(model.factors, factors)]
    return model.factors[n] @ core_contraction(model.core, V, n)


def tucker_norm_sq(model: TuckerModel) -> float:
    """Squared norm of a Tucker model, ``<G, G x_n U^(n).T U^(n)>``; factors need not be orthonormal."""
    grams = [U.T @ U for U in model.factors]
    return float(np.sum(model.core * multi_ttm(model.core, grams)))


def compressed_objective(model: TuckerModel, factors: Sequence[np.ndarray]) -> float:
    """``0.5 * ||Y_T - [[A]]||^2`` evaluated from Gram identities only."""
    _check_conforming(model, factors)
    V = [U.T @ A for U, A in zip(model.factors, factors)]
    cross = np.sum(V[-1] * core_contraction(model.core, V, model.order - 1))
    model_sq = np.sum(gram_hadamard(list(factors)))
    return 0.5 * max(tucker_norm_sq(model) - 2.0 * cross + model_sq, 0.0)


def _update_rule(constraint: ConstraintSpec):
    kind = constraint.kind
    if kind is ConstraintKind.NONE:
        return als_update
    if kind is ConstraintKind.NONNEG_MU:
        return mu_update
    if kind is ConstraintKind.NONNEG_HALS:
        return hals_update

    def sparse_update(A, YB, BtB):
        return soft_threshold(als_update(A, YB, BtB), constraint.c)

    return sparse_update


def ffcp(model: TuckerModel, rank: int, constraint: ConstraintSpec = ConstraintSpec(),
         stop: StopRule = StopRule(), seed=None) -> CpResult:
    """
    CP decomposition of a Tucker-compressed tensor.

    Each mode update uses ``YB ~ U^(n) @ H`` and the exact ``BtB`` of the
    current factors, then refreshes ``V^(n)``. The fit in the trace is
    measured against the Tucker model, not the original tensor.

    Args:
        model: Tucker representation (orthonormal factors give the usual
            equivalence with CP of the full tensor)
        rank: Number of components R
        constraint: Update rule and its parameter
        stop: Stopping rule
        seed: SeedSpec or integer root seed of the initialization

    Returns:
        CpResult with factors of the full shape

    Raises:
        ValueError: On a bad rank or a zero model
    """
    if int(rank) != rank or rank < 1:
        raise ValueError(f"Rank must be a positive integer, got {rank}")
    norm_sq = tucker_norm_sq(model)
    if norm_sq <= 0.0:
        raise ValueError("FFCP cannot fit a zero Tucker model")

    label = f"FFCP[{constraint.kind.value}]"
    _log.debug("%s on core %s, full shape %s, rank %d", label, model.ranks, model.shape, rank)
    factors = initial_factors(model.shape, rank, seed, nonneg=constraint.kind.nonneg)
    V: List[np.ndarray] = [U.T @ A for U, A in zip(model.factors, factors)]

    def terms(current, n):
        H = core_contraction(model.core, V, n)
        return model.factors[n] @ H, gram_hadamard(current, skip=n)

    def refresh(n, A):
        V[n] = model.factors[n].T @ A

    return run_sweeps(factors, norm_sq, stop, terms, _update_rule(constraint), label, after_update=refresh)


def tucker_cp(model: TuckerModel, rank: int, stop: StopRule = StopRule(), seed=None) -> CpResult:
    """
    Tucker+CP baseline: CP-ALS on the core, factors mapped back by ``U^(n)``.

    Args:
        model: Tucker model with orthonormal factors
        rank: Number of components R, may exceed the core dimensions

    Returns:
        CpResult whose trace is the fit of the core decomposition
    """
    inner = cp_als(model.core, rank, stop, seed)
    factors = [U @ A for U, A in zip(model.factors, inner.model.factors)]
    return CpResult(CpModel(factors).normalized(), inner.trace, inner.iterations, inner.converged)
