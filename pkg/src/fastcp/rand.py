"""
Seeded Gaussian generation and the randomized range finder.

Every random draw in the package goes through :class:`SeedSpec`: a root seed
plus a stream id, mapped onto a counter-based Philox generator through
``numpy.random.SeedSequence``. Equal (root, stream) pairs give equal numbers
on any host and under any thread count.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

_log = logging.getLogger(__name__)

#: Relative threshold below which a direction counts as numerically absent.
RANK_TOL = 1e-12

#: Default oversampling parameter p.
DEFAULT_OVERSAMPLE = 10

_SEED_MASK = (1 << 64) - 1

# Stream tags, first element of every derived key path.
STREAM_SKETCH = 1
STREAM_INIT = 2
STREAM_DATA = 3
STREAM_NOISE = 4
STREAM_RUN = 5


@dataclass(frozen=True)
class SeedSpec:
    """Root seed plus stream id; the unit of reproducibility."""

    root: int
    stream: int = 0

    def __post_init__(self):
        if self.stream < 0:
            raise ValueError(f"Stream id must be non-negative, got {self.stream}")

    def spawn(self, *keys: int) -> "SeedSpec":
        """Derive an independent child stream from this one and a key path."""
        if any(k < 0 for k in keys):
            raise ValueError(f"Stream keys must be non-negative, got {keys}")
        state = np.random.SeedSequence([self.stream, *keys]).generate_state(2, np.uint64)
        return SeedSpec(self.root, (int(state[0]) << 64) | int(state[1]))

    def generator(self) -> np.random.Generator:
        """NumPy generator for this stream."""
        sequence = np.random.SeedSequence(self.root & _SEED_MASK, spawn_key=(self.stream,))
        return np.random.Generator(np.random.Philox(sequence))


def as_seed(seed) -> SeedSpec:
    """Accept a SeedSpec, an integer root seed or None (root 0)."""
    if isinstance(seed, SeedSpec):
        return seed
    return SeedSpec(0 if seed is None else int(seed))


def gaussian_matrix(rows: int, cols: int, seed: SeedSpec) -> np.ndarray:
    """
    I.i.d. standard normal matrix, filled column by column.

    Args:
        rows: Number of rows (>= 1)
        cols: Number of columns (>= 1)
        seed: Stream the entries are drawn from

    Returns:
        rows x cols float64 matrix
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"Gaussian matrix needs positive dimensions, got {rows}x{cols}")
    return seed.generator().standard_normal((cols, rows)).T


def sketch_matrix(dims: Sequence[int], cols: int, seed: SeedSpec,
                  ranges: Optional[Sequence[range]] = None) -> np.ndarray:
    """
    Rows of a Gaussian test matrix indexed by a multi-index.

    The full matrix has ``prod(dims)`` rows, row i corresponding to the
    column-major linear index of (i_1, ..., i_m) in ``dims``. Rows sharing
    the last index t form a slab drawn from stream ``seed.spawn(t)``, so any
    Cartesian block of rows can be produced on its own and is bit-identical
    to the same rows of the full matrix.

    Args:
        dims: Sizes of the indexing modes, lowest mode first
        cols: Number of columns
        seed: Stream of the whole matrix
        ranges: One index range per entry of ``dims`` selecting a block of
            rows (default: all rows)

    Returns:
        The selected rows, ordered column-major over ``ranges``
    """
    dims = tuple(int(d) for d in dims)
    if not dims:
        return gaussian_matrix(1, cols, seed.spawn(0))
    if ranges is None:
        ranges = [range(d) for d in dims]
    if len(ranges) != len(dims):
        raise ValueError(f"Expected {len(dims)} index ranges, got {len(ranges)}")

    inner_dims = dims[:-1]
    inner_rows = int(np.prod(inner_dims, dtype=np.int64))
    if inner_dims:
        grids = np.meshgrid(*[np.asarray(r) for r in ranges[:-1]], indexing="ij")
        selection = np.ravel_multi_index(grids, inner_dims, order="F").ravel(order="F")
    else:
        selection = np.zeros(1, dtype=np.int64)
    full_inner = selection.size == inner_rows

    slabs = []
    for t in ranges[-1]:
        slab = gaussian_matrix(inner_rows, cols, seed.spawn(t))
        slabs.append(slab if full_inner else slab[selection])
    return np.vstack(slabs)


def _sign_fix(V: np.ndarray) -> np.ndarray:
    """Signs making the largest-magnitude entry of each column positive."""
    if V.size == 0:
        return np.ones(V.shape[1])
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return signs


def _above_floor(power: np.ndarray) -> np.ndarray:
    """Directions whose power (eigenvalue, or squared singular value) exceeds ``RANK_TOL`` of the largest."""
    return power > RANK_TOL * power[0]


def orthonormal_basis(Z: np.ndarray) -> np.ndarray:
    """
    Orthonormal basis of range(Z) by pivoted QR.

    The basis is rotated to the left singular vectors of Z, ordered by
    decreasing singular value, with each right singular vector's
    largest-magnitude entry positive. :func:`gram_orthonormalize` returns
    the same basis, so both paths agree column by column.

    Columns whose pivoted R diagonal falls below ``RANK_TOL`` times the
    largest are dropped, and so are singular directions whose squared
    singular value falls below the eigenvalue floor of :func:`gram_transform`.
    The number of returned columns is the effective rank, the same one the
    Gram path reports for the same Z.

    Args:
        Z: Matrix whose range is wanted

    Returns:
        Matrix Q with ``Q.T @ Q == I`` and ``range(Q) == range(Z)``
    """
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2:
        raise ValueError(f"Expected a matrix, got shape {Z.shape}")
    if Z.shape[1] == 0 or not np.any(Z):
        _log.warning("Range of a zero %dx%d matrix is empty", *Z.shape)
        return np.zeros((Z.shape[0], 0))

    Q, R, piv = scipy.linalg.qr(Z, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.count_nonzero(diag > RANK_TOL * diag[0]))
    if rank < Z.shape[1]:
        _log.warning("Dropped %d rank-deficient columns (effective rank %d)", Z.shape[1] - rank, rank)

    R_orig = np.empty((rank, Z.shape[1]))
    R_orig[:, piv] = R[:rank]
    Ur, s, Vt = scipy.linalg.svd(R_orig, full_matrices=False)
    keep = _above_floor(s ** 2)
    if not np.all(keep):
        _log.warning("Dropped %d directions below the eigenvalue floor", int(np.count_nonzero(~keep)))
        Ur, Vt = Ur[:, keep], Vt[keep]
    signs = _sign_fix(Vt.T)
    return (Q[:, :rank] @ Ur) * signs


def range_finder(M: np.ndarray, r_tilde: int, seed: SeedSpec) -> np.ndarray:
    """
    Randomized range finder: orthonormal basis of ``M @ Omega``.

    Args:
        M: Matrix to sketch
        r_tilde: Number of Gaussian test vectors (target rank plus oversampling)
        seed: Stream of the test matrix

    Returns:
        Orthonormal basis with at most ``r_tilde`` columns
    """
    if r_tilde < 1:
        raise ValueError(f"r_tilde must be at least 1, got {r_tilde}")
    M = np.asarray(M, dtype=np.float64)
    omega = gaussian_matrix(M.shape[1], r_tilde, seed)
    return orthonormal_basis(M @ omega)


def gram_transform(gram: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Map a summed Gram matrix ``Z.T @ Z`` to the transform orthonormalizing Z.

    With ``Z.T Z = V diag(w) V.T`` the transform is ``V diag(w)^(-1/2)``, so
    ``Z @ transform`` has orthonormal columns. Directions whose eigenvalue
    falls below ``RANK_TOL`` times the largest are dropped.

    Args:
        gram: Symmetric positive semidefinite R x R matrix

    Returns:
        (R x R' transform, kept eigenvalues in decreasing order)
    """
    cols = gram.shape[1]
    if cols == 0:
        _log.warning("Gram matrix is empty; effective rank 0")
        return np.zeros((0, 0)), np.zeros(0)
    w, V = scipy.linalg.eigh(gram)
    w, V = w[::-1], V[:, ::-1]
    if w[0] <= 0.0:
        _log.warning("Gram matrix is zero; effective rank 0")
        return np.zeros((cols, 0)), np.zeros(0)

    keep = _above_floor(w)
    if not np.all(keep):
        _log.warning("Dropped %d directions below the eigenvalue floor", int(np.count_nonzero(~keep)))
    w, V = w[keep], V[:, keep]
    V = V * _sign_fix(V)
    return V / np.sqrt(w), w


def gram_orthonormalize(blocks: Sequence[np.ndarray]) -> Tuple[List[np.ndarray], np.ndarray]:
    """
    Orthonormalize a row-partitioned matrix through its Gram matrix.

    Computes ``sum_s Z_s.T Z_s`` and applies :func:`gram_transform` to every
    block. Only R x R quantities cross block boundaries, so each block can be
    finished where it lives.

    Args:
        blocks: Row blocks Z_s sharing the column count

    Returns:
        (orthonormalized blocks, kept eigenvalues in decreasing order)
    """
    if not blocks:
        raise ValueError("gram_orthonormalize needs at least one block")
    cols = blocks[0].shape[1]
    if any(Z.shape[1] != cols for Z in blocks):
        raise ValueError("Blocks must share their column count")

    gram = np.zeros((cols, cols))
    for Z in blocks:
        gram += Z.T @ Z
    transform, w = gram_transform(gram)
    return [Z @ transform for Z in blocks], w
