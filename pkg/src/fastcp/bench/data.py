"""
Synthetic ground truth and noise for the benchmarks.
"""

import enum
import logging
from typing import Sequence, Tuple

import numpy as np

from ..cp import CpModel, cp_reconstruct
from ..rand import STREAM_DATA, STREAM_NOISE, STREAM_RUN, SeedSpec, as_seed, gaussian_matrix
from ..tensor import as_tensor, frobenius_norm
from ..tucker import TuckerModel, normalize_ranks, reconstruct

_log = logging.getLogger(__name__)

#: Mean of the exponential factor entries of the nonnegative generator.
EXPONENTIAL_MEAN = 10.0

DEFAULT_ZERO_FRACTION = 0.1


class Generator(enum.Enum):
    CP_GAUSSIAN = "cp_gaussian"
    CP_EXPONENTIAL_SPARSE = "cp_exponential_sparse"
    TUCKER_GAUSSIAN = "tucker_gaussian"


def _check_dims(dims: Sequence[int]) -> Tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise ValueError(f"Dimensions must be positive, got {dims}")
    return dims


def gen_cp_factors(dims: Sequence[int], rank: int, seed, distribution: str = "normal",
                   zero_fraction: float = DEFAULT_ZERO_FRACTION) -> CpModel:
    """
    Random CP ground truth.

    Args:
        dims: Tensor dimensions
        rank: Number of components R
        seed: SeedSpec or integer root seed
        distribution: ``"normal"`` (standard normal entries) or
            ``"exponential"`` (mean 10, with ``zero_fraction`` of every
            factor's entries set to zero at random positions)
        zero_fraction: Share of zero entries of the exponential variant

    Returns:
        CpModel with one factor per mode
    """
    dims = _check_dims(dims)
    if rank < 1:
        raise ValueError(f"Rank must be positive, got {rank}")
    if rank > min(dims):
        _log.warning("Rank %d exceeds the smallest dimension %d", rank, min(dims))
    seed = as_seed(seed)

    if distribution == "normal":
        return CpModel([gaussian_matrix(dim, rank, seed.spawn(n)) for n, dim in enumerate(dims)])
    if distribution != "exponential":
        raise ValueError(f"Unknown factor distribution {distribution!r}")
    if not 0.0 <= zero_fraction < 1.0:
        raise ValueError(f"zero_fraction must lie in [0, 1), got {zero_fraction}")

    factors = []
    for n, dim in enumerate(dims):
        rng = seed.spawn(n).generator()
        A = rng.exponential(EXPONENTIAL_MEAN, size=(rank, dim)).T
        zeros = rng.permutation(A.size)[:int(round(zero_fraction * A.size))]
        A[np.unravel_index(zeros, A.shape, order="F")] = 0.0
        factors.append(A)
    return CpModel(factors)


def gen_cp_tensor(dims: Sequence[int], rank: int, seed, distribution: str = "normal",
                  zero_fraction: float = DEFAULT_ZERO_FRACTION) -> Tuple[np.ndarray, CpModel]:
    """
    Noise-free CP tensor and its ground-truth factors.

    Returns:
        (Y*, ground truth) with ``Y* = cp_reconstruct(ground truth)``
    """
    truth = gen_cp_factors(dims, rank, seed, distribution, zero_fraction)
    return cp_reconstruct(truth), truth


def gen_tucker_tensor(dims: Sequence[int], ranks, seed) -> Tuple[np.ndarray, TuckerModel]:
    """
    Noise-free Tucker tensor with Gaussian core and Gaussian factors.

    Returns:
        (Y*, ground truth)
    """
    dims = _check_dims(dims)
    ranks = normalize_ranks(dims, ranks)
    seed = as_seed(seed)
    rng = seed.spawn(len(dims)).generator()
    core = rng.standard_normal(tuple(reversed(ranks))).transpose()
    factors = [gaussian_matrix(dim, r, seed.spawn(n)) for n, (dim, r) in enumerate(zip(dims, ranks))]
    truth = TuckerModel(core, factors)
    return reconstruct(truth), truth


def tucker_format_cp(truth: CpModel) -> TuckerModel:
    """
    Exact Tucker representation of a CP model: superdiagonal core of ones,
    the CP factors as Tucker factors (not orthonormal).
    """
    R, N = truth.rank, truth.order
    core = np.zeros((R,) * N)
    core[(np.arange(R),) * N] = 1.0
    return TuckerModel(core, [A.copy() for A in truth.factors])


def add_noise(Y: np.ndarray, snr_db: float, seed) -> np.ndarray:
    """
    Add white Gaussian noise at an exact signal-to-noise ratio.

    The noise draw is rescaled so that ``10 log10(||Y||^2 / ||noise||^2)``
    equals ``snr_db`` for the realized noise, not just in expectation.

    Args:
        Y: Noise-free tensor
        snr_db: Target SNR in dB; ``+inf`` returns an unchanged copy
        seed: SeedSpec or integer root seed of the noise

    Raises:
        ValueError: On a zero tensor or an SNR that is NaN or -inf
    """
    Y = as_tensor(Y)
    if np.isnan(snr_db) or snr_db == -np.inf:
        raise ValueError(f"SNR must be finite or +inf, got {snr_db}")
    if snr_db == np.inf:
        return Y.copy()
    signal = frobenius_norm(Y)
    if signal == 0.0:
        raise ValueError("Cannot set an SNR for a zero tensor")

    E = as_seed(seed).generator().standard_normal(Y.size).reshape(Y.shape, order="F")
    sigma = signal / (frobenius_norm(E) * 10.0 ** (snr_db / 20.0))
    return Y + sigma * E


def realized_snr(Y: np.ndarray, noisy: np.ndarray) -> float:
    """SNR in dB of ``noisy`` relative to the clean tensor Y, inf when they coincide."""
    noise = frobenius_norm(np.asarray(noisy) - Y)
    if noise == 0.0:
        return np.inf
    return float(20.0 * np.log10(frobenius_norm(Y) / noise))


def run_seeds(root: int, run: int) -> Tuple[SeedSpec, SeedSpec, SeedSpec]:
    """(data, noise, algorithm) streams of one Monte-Carlo run."""
    base = SeedSpec(int(root))
    return base.spawn(STREAM_DATA, run), base.spawn(STREAM_NOISE, run), base.spawn(STREAM_RUN, run)
