"""
Tucker models and compression algorithms.

HOSVD and Tucker-ALS are the deterministic baselines; RandTucker and
RandTucker2i replace the SVD of big unfoldings with Gaussian sketches and
orthonormal bases of the sketched matrices.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg

from .rand import (
    DEFAULT_OVERSAMPLE,
    STREAM_INIT,
    STREAM_SKETCH,
    SeedSpec,
    as_seed,
    gaussian_matrix,
    orthonormal_basis,
    sketch_matrix,
)
from .tensor import as_tensor, multi_ttm, ttm, unfold

_log = logging.getLogger(__name__)


@dataclass
class TuckerModel:
    """
    Core tensor G with one factor matrix per mode.

    The represented tensor is ``G x_1 U^(1) ... x_N U^(N)``; factor n is
    I_n x R_n where R_n is the n-th core dimension.
    """

    core: np.ndarray
    factors: List[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        self.core = np.asarray(self.core, dtype=np.float64)
        self.factors = [np.asarray(U, dtype=np.float64) for U in self.factors]
        if len(self.factors) != self.core.ndim:
            raise ValueError(
                f"Core of order {self.core.ndim} needs {self.core.ndim} factors, got {len(self.factors)}"
            )
        for n, U in enumerate(self.factors):
            if U.ndim != 2 or U.shape[1] != self.core.shape[n]:
                raise ValueError(
                    f"Factor {n} has shape {U.shape}, expected {self.core.shape[n]} columns"
                )

    @property
    def order(self) -> int:
        return self.core.ndim

    @property
    def shape(self) -> tuple:
        """Shape of the represented full tensor."""
        return tuple(U.shape[0] for U in self.factors)

    @property
    def ranks(self) -> tuple:
        return self.core.shape

    def full(self) -> np.ndarray:
        return reconstruct(self)


def reconstruct(model: TuckerModel) -> np.ndarray:
    """
    Expand a Tucker model into its full tensor.

    Args:
        model: Tucker model

    Returns:
        ``G x_1 U^(1) ... x_N U^(N)``
    """
    return multi_ttm(model.core, model.factors)


def normalize_ranks(shape: Sequence[int], ranks) -> List[int]:
    """One positive rank per mode; a scalar applies to every mode."""
    if np.isscalar(ranks):
        ranks = [int(ranks)] * len(shape)
    ranks = [int(r) for r in ranks]
    if len(ranks) != len(shape):
        raise ValueError(f"Expected {len(shape)} ranks, got {len(ranks)}")
    if any(r < 1 for r in ranks):
        raise ValueError(f"Ranks must be positive, got {ranks}")
    return ranks


def _largest_entry_positive(U: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs


def leading_left_singular_vectors(M: np.ndarray, rank: int) -> np.ndarray:
    """
    Top ``rank`` left singular vectors of M, largest entry of each positive.

    Wide matrices go through the eigendecomposition of the small Gram matrix
    ``M @ M.T`` instead of a full SVD.
    """
    rows, cols = M.shape
    if cols > rows:
        _, vecs = scipy.linalg.eigh(M @ M.T, subset_by_index=[rows - rank, rows - 1])
        U = vecs[:, ::-1]
    else:
        U = scipy.linalg.svd(M, full_matrices=False)[0][:, :rank]
    return _largest_entry_positive(U)


def hosvd(Y: np.ndarray, ranks) -> TuckerModel:
    """
    Truncated higher-order SVD.

    Args:
        Y: Tensor to compress
        ranks: Multilinear rank (R_1, ..., R_N), or one rank for every mode

    Returns:
        Tucker model with orthonormal factors

    Raises:
        ValueError: If a rank exceeds its dimension
    """
    Y = as_tensor(Y)
    ranks = normalize_ranks(Y.shape, ranks)
    for n, (r, dim) in enumerate(zip(ranks, Y.shape)):
        if r > dim:
            raise ValueError(f"Rank {r} exceeds dimension {dim} of mode {n}")

    factors = [leading_left_singular_vectors(unfold(Y, n), r) for n, r in enumerate(ranks)]
    core = multi_ttm(Y, factors, transpose=True)
    return TuckerModel(core, factors)


def tucker_als(Y: np.ndarray, ranks, iters: int = 2,
               init: Optional[TuckerModel] = None) -> TuckerModel:
    """
    Tucker-ALS (higher-order orthogonal iteration).

    Args:
        Y: Tensor to compress
        ranks: Multilinear rank
        iters: Number of sweeps over all modes
        init: Starting model (default: HOSVD)

    Returns:
        Tucker model with orthonormal factors
    """
    Y = as_tensor(Y)
    ranks = normalize_ranks(Y.shape, ranks)
    factors = list((init or hosvd(Y, ranks)).factors)

    for sweep in range(iters):
        for n in range(Y.ndim):
            X = multi_ttm(Y, factors, transpose=True, skip=n)
            factors[n] = leading_left_singular_vectors(unfold(X, n), ranks[n])
        _log.debug("Tucker-ALS sweep %d done", sweep + 1)

    return TuckerModel(multi_ttm(Y, factors, transpose=True), factors)


def _sketch_dims(shape: Sequence[int], n: int) -> List[int]:
    return [d for k, d in enumerate(shape) if k != n]


def rand_tucker(Y: np.ndarray, ranks, p: int = DEFAULT_OVERSAMPLE, seed=None) -> TuckerModel:
    """
    Randomized Tucker decomposition (RandTucker).

    For each mode in order 1..N: sketch the current unfolding with a Gaussian
    matrix of ``R_n + p`` columns, take an orthonormal basis as U^(n), then
    shrink that mode of the working tensor by ``U^(n).T``. The working tensor
    left after the last mode is the core.

    Args:
        Y: Tensor to compress
        ranks: Target multilinear rank
        p: Oversampling parameter
        seed: SeedSpec or integer root seed

    Returns:
        Tucker model with core dimensions ``R_n + p`` (fewer on rank deficiency)
    """
    Y = as_tensor(Y)
    ranks = normalize_ranks(Y.shape, ranks)
    seed = as_seed(seed)

    current = Y
    factors = []
    for n in range(Y.ndim):
        omega = sketch_matrix(_sketch_dims(current.shape, n), ranks[n] + p, seed.spawn(STREAM_SKETCH, n, 0))
        U = orthonormal_basis(unfold(current, n) @ omega)
        current = ttm(current, U.T, n)
        factors.append(U)
    return TuckerModel(current, factors)


def initial_factors(shape: Sequence[int], r_tilde: Sequence[int], seed: SeedSpec) -> List[np.ndarray]:
    """Gaussian starting factors of RandTucker2i."""
    return [gaussian_matrix(dim, r, seed.spawn(STREAM_INIT, n))
            for n, (dim, r) in enumerate(zip(shape, r_tilde))]


def rand_tucker_2i(Y: np.ndarray, ranks, p: int = DEFAULT_OVERSAMPLE, seed=None) -> TuckerModel:
    """
    RandTucker with two projected passes (RandTucker2i).

    Starts from Gaussian factors. In each of two passes over the modes, the
    tensor is projected onto the current factors of all other modes, the
    projected unfolding is sketched and its orthonormal basis becomes the new
    factor. The core is the projection of Y onto all final factors.

    Args:
        Y: Tensor to compress
        ranks: Target multilinear rank
        p: Oversampling parameter
        seed: SeedSpec or integer root seed

    Returns:
        Tucker model with orthonormal factors
    """
    Y = as_tensor(Y)
    ranks = normalize_ranks(Y.shape, ranks)
    seed = as_seed(seed)
    r_tilde = [r + p for r in ranks]

    factors = initial_factors(Y.shape, r_tilde, seed)
    for pass_index in (1, 2):
        for n in range(Y.ndim):
            X = multi_ttm(Y, factors, transpose=True, skip=n)
            omega = sketch_matrix(_sketch_dims(X.shape, n), r_tilde[n],
                                  seed.spawn(STREAM_SKETCH, n, pass_index))
            factors[n] = orthonormal_basis(unfold(X, n) @ omega)

    return TuckerModel(multi_ttm(Y, factors, transpose=True), factors)
