"""
Dense tensor kernels.

Tensors are float64 NumPy arrays whose logical element order is column-major
(first index varies fastest). Every unfolding, fold and file payload in the
package follows that order, whatever the in-memory layout of the array is.
"""

from typing import Optional, Sequence

import numpy as np
import scipy.linalg


def as_tensor(data, copy: bool = False) -> np.ndarray:
    """
    Validate and convert array-like data to a dense float64 tensor.

    Args:
        data: Array-like with at least one dimension
        copy: Force a copy even if ``data`` already is a float64 array

    Returns:
        Float64 NumPy array

    Raises:
        TypeError: If data cannot be interpreted as a numeric array
        ValueError: If the array is 0-dimensional or has an empty mode
    """
    try:
        if copy:
            tensor = np.array(data, dtype=np.float64)
        else:
            tensor = np.asarray(data, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise TypeError(f"Tensor data must be numeric, got {type(data).__name__}") from exc

    if tensor.ndim < 1:
        raise ValueError("Tensor must have at least one mode")
    if any(dim < 1 for dim in tensor.shape):
        raise ValueError(f"Every tensor dimension must be positive, got shape {tensor.shape}")
    return tensor


def _check_mode(ndim: int, n: int) -> int:
    if not isinstance(n, (int, np.integer)) or not 0 <= n < ndim:
        raise ValueError(f"Mode {n} out of range for a tensor of order {ndim}")
    return int(n)


def unfold(T: np.ndarray, n: int) -> np.ndarray:
    """
    Mode-n matricization.

    Element (i_1, ..., i_N) lands in row i_n; the remaining modes index the
    columns in ascending mode order with the lowest mode varying fastest.

    Args:
        T: Tensor of order N
        n: Mode (0-based)

    Returns:
        I_n x prod_{k != n} I_k matrix

    Raises:
        ValueError: If the mode is out of range
    """
    T = np.asarray(T)
    n = _check_mode(T.ndim, n)
    return np.reshape(np.moveaxis(T, n, 0), (T.shape[n], -1), order="F")


def fold(M: np.ndarray, n: int, shape: Sequence[int]) -> np.ndarray:
    """
    Inverse of :func:`unfold`.

    Args:
        M: Matrix with ``shape[n]`` rows and ``prod(shape) / shape[n]`` columns
        n: Mode the matrix was unfolded along
        shape: Shape of the tensor to rebuild

    Returns:
        Tensor of the given shape

    Raises:
        ValueError: If the matrix does not match the shape
    """
    M = np.asarray(M)
    shape = tuple(int(s) for s in shape)
    n = _check_mode(len(shape), n)
    expected = (shape[n], int(np.prod(shape, dtype=np.int64)) // shape[n])
    if M.ndim != 2 or M.shape != expected:
        raise ValueError(f"Cannot fold a {M.shape} matrix along mode {n} into shape {shape}")

    moved = (shape[n],) + shape[:n] + shape[n + 1:]
    return np.moveaxis(np.reshape(M, moved, order="F"), 0, n)


def ttm(T: np.ndarray, M: np.ndarray, n: int) -> np.ndarray:
    """
    Mode-n tensor-times-matrix product ``T x_n M``.

    Args:
        T: Tensor of order N
        M: Matrix with ``T.shape[n]`` columns
        n: Mode (0-based)

    Returns:
        Tensor with dimension n replaced by ``M.shape[0]``

    Raises:
        ValueError: If the mode is out of range or the sizes do not agree
    """
    T = np.asarray(T)
    M = np.asarray(M)
    n = _check_mode(T.ndim, n)
    if M.ndim != 2 or M.shape[1] != T.shape[n]:
        raise ValueError(
            f"Matrix of shape {M.shape} cannot multiply mode {n} of a tensor with shape {T.shape}"
        )
    return np.moveaxis(np.tensordot(T, M, axes=(n, 1)), -1, n)


def multi_ttm(T: np.ndarray, matrices: Sequence[Optional[np.ndarray]],
              transpose: bool = False, skip: Optional[int] = None) -> np.ndarray:
    """
    Multiply a tensor by one matrix per mode.

    Args:
        T: Tensor of order N
        matrices: N matrices; ``None`` entries leave that mode untouched
        transpose: Multiply by the transposes instead
        skip: Mode to leave out

    Returns:
        The product tensor
    """
    if len(matrices) != np.ndim(T):
        raise ValueError(f"Expected {np.ndim(T)} matrices, got {len(matrices)}")
    result = np.asarray(T)
    for n, M in enumerate(matrices):
        if n == skip or M is None:
            continue
        result = ttm(result, M.T if transpose else M, n)
    return result


def kron(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Kronecker product of two matrices."""
    return np.kron(np.atleast_2d(A), np.atleast_2d(B))


def khatri_rao(matrices: Sequence[np.ndarray]) -> np.ndarray:
    """
    Column-wise Kronecker product, applied in list order.

    Column r of ``khatri_rao([A, B])`` equals ``kron(A[:, r], B[:, r])``.

    Args:
        matrices: Non-empty list of matrices sharing the column count R

    Returns:
        (prod rows) x R matrix

    Raises:
        ValueError: If the list is empty or the column counts differ
    """
    if len(matrices) == 0:
        raise ValueError("khatri_rao needs at least one matrix")
    mats = [np.atleast_2d(np.asarray(M, dtype=np.float64)) for M in matrices]
    R = mats[0].shape[1]
    if any(M.shape[1] != R for M in mats):
        raise ValueError(f"Column counts differ: {[M.shape[1] for M in mats]}")

    result = mats[0]
    for M in mats[1:]:
        result = (result[:, None, :] * M[None, :, :]).reshape(-1, R)
    return result


def khatri_rao_except(factors: Sequence[np.ndarray], skip: int) -> np.ndarray:
    """
    The matrix B^(n) of the CP gradient.

    Uses descending mode order N-1, ..., n+1, n-1, ..., 0, which makes
    ``unfold([[A]], n) == A[n] @ B.T`` hold with :func:`unfold`'s column order.
    """
    return khatri_rao([factors[p] for p in reversed(range(len(factors))) if p != skip])


def gram_hadamard(factors: Sequence[np.ndarray], skip: Optional[int] = None) -> np.ndarray:
    """
    Hadamard product of factor Gram matrices, skipping one mode.

    Equals ``B.T @ B`` for ``B = khatri_rao_except(factors, skip)`` without
    forming B.

    Args:
        factors: Matrices sharing the column count R
        skip: Mode to leave out (``None`` keeps all)

    Returns:
        R x R symmetric positive semidefinite matrix

    Raises:
        ValueError: If the column counts differ
    """
    R = factors[0].shape[1]
    if any(A.shape[1] != R for A in factors):
        raise ValueError(f"Column counts differ: {[A.shape[1] for A in factors]}")

    result = np.ones((R, R))
    for p, A in enumerate(factors):
        if p != skip:
            result *= A.T @ A
    return result


def frobenius_norm(T: np.ndarray) -> float:
    """Frobenius norm of a tensor of any order."""
    return float(np.linalg.norm(np.ravel(T)))


def fit(Y: np.ndarray, Yhat) -> float:
    """
    Reconstruction fit ``1 - ||Y - Yhat||_F / ||Y||_F``.

    Args:
        Y: Reference tensor
        Yhat: Approximation with the same shape (a scalar 0 means zero tensor)

    Returns:
        Fit value, 1 for an exact match

    Raises:
        ValueError: If the shapes differ or Y is zero
    """
    Y = np.asarray(Y, dtype=np.float64)
    Yhat = np.asarray(Yhat, dtype=np.float64)
    if Yhat.ndim == 0:
        Yhat = np.broadcast_to(Yhat, Y.shape)
    if Yhat.shape != Y.shape:
        raise ValueError(f"Shape mismatch: {Y.shape} vs {Yhat.shape}")

    norm_y = frobenius_norm(Y)
    if norm_y == 0.0:
        raise ValueError("Fit is undefined for a zero reference tensor")
    return 1.0 - frobenius_norm(Y - Yhat) / norm_y


def principal_angles(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """
    Principal angles (radians) between the column spaces of A and B.

    Both inputs are orthonormalized first, so any bases of the two ranges
    can be compared.
    """
    return scipy.linalg.subspace_angles(A, B)
