"""
Test the dense tensor kernels against small hand-computed values and
explicit constructions.
"""

import numpy as np
import pytest

from fastcp.tensor import (
    as_tensor,
    fit,
    fold,
    frobenius_norm,
    gram_hadamard,
    khatri_rao,
    khatri_rao_except,
    kron,
    multi_ttm,
    principal_angles,
    ttm,
    unfold,
)


def column_major(values, shape):
    """Tensor whose column-major element order is ``values``."""
    return np.reshape(np.asarray(values, dtype=np.float64), shape, order="F")


def cp_tensor(factors):
    """Dense CP tensor built element by element from outer products."""
    R = factors[0].shape[1]
    result = 0.0
    for r in range(R):
        term = factors[0][:, r]
        for A in factors[1:]:
            term = np.multiply.outer(term, A[:, r])
        result = result + term
    return result


class TestUnfold:
    """Mode-n matricization and its inverse."""

    def test_unfold_mode0_of_2x2x2(self):
        T = column_major(np.arange(1, 9), (2, 2, 2))
        expected = np.array([[1, 3, 5, 7], [2, 4, 6, 8]], dtype=float)
        assert np.array_equal(unfold(T, 0), expected), f"Got {unfold(T, 0)}"

    def test_unfold_mode1_of_2x2x2(self):
        T = column_major(np.arange(1, 9), (2, 2, 2))
        expected = np.array([[1, 2, 5, 6], [3, 4, 7, 8]], dtype=float)
        assert np.array_equal(unfold(T, 1), expected), f"Got {unfold(T, 1)}"

    def test_unfold_mode2_of_2x2x2(self):
        T = column_major(np.arange(1, 9), (2, 2, 2))
        expected = np.array([[1, 2, 3, 4], [5, 6, 7, 8]], dtype=float)
        assert np.array_equal(unfold(T, 2), expected)

    def test_unfold_vector_is_column(self):
        v = np.arange(5.0)
        assert unfold(v, 0).shape == (5, 1)

    def test_fold_roundtrip_is_exact(self):
        rng = np.random.default_rng(0)
        T = rng.standard_normal((3, 4, 2, 5))
        for n in range(T.ndim):
            assert np.array_equal(fold(unfold(T, n), n, T.shape), T), f"Roundtrip failed for mode {n}"

    def test_fold_roundtrip_with_c_order_memory(self):
        """The logical order does not depend on the memory layout."""
        rng = np.random.default_rng(1)
        T = np.ascontiguousarray(rng.standard_normal((4, 3, 2)))
        F = np.asfortranarray(T)
        assert np.array_equal(unfold(T, 1), unfold(F, 1))

    def test_mode_out_of_range(self):
        with pytest.raises(ValueError):
            unfold(np.zeros((2, 2)), 2)
        with pytest.raises(ValueError):
            unfold(np.zeros((2, 2)), -1)

    def test_fold_wrong_size(self):
        with pytest.raises(ValueError):
            fold(np.zeros((2, 3)), 0, (2, 2, 2))


class TestTtm:
    """Mode products."""

    def test_ttm_matches_unfolded_product(self):
        rng = np.random.default_rng(2)
        T = rng.standard_normal((3, 4, 2))
        M = rng.standard_normal((5, 4))
        P = ttm(T, M, 1)
        assert P.shape == (3, 5, 2)
        assert np.allclose(unfold(P, 1), M @ unfold(T, 1), atol=1e-12)

    def test_ttm_size_mismatch(self):
        with pytest.raises(ValueError):
            ttm(np.zeros((3, 4)), np.zeros((2, 3)), 1)

    def test_multi_ttm_skip_and_transpose(self):
        rng = np.random.default_rng(3)
        T = rng.standard_normal((4, 5, 6))
        U = [rng.standard_normal((I, 2)) for I in T.shape]
        P = multi_ttm(T, U, transpose=True, skip=1)
        expected = ttm(ttm(T, U[0].T, 0), U[2].T, 2)
        assert P.shape == (2, 5, 2)
        assert np.allclose(P, expected, atol=1e-12)

    def test_multi_ttm_needs_one_matrix_per_mode(self):
        with pytest.raises(ValueError):
            multi_ttm(np.zeros((2, 2, 2)), [np.eye(2)] * 2)


class TestProducts:
    """Kronecker, Khatri-Rao and Gram-Hadamard products."""

    def test_kron_small(self):
        A = np.array([[1.0, 2.0]])
        B = np.array([[1.0], [3.0]])
        assert np.array_equal(kron(A, B), np.array([[1, 2], [3, 6]], dtype=float))

    def test_khatri_rao_columns(self):
        rng = np.random.default_rng(4)
        A = rng.standard_normal((3, 2))
        B = rng.standard_normal((4, 2))
        K = khatri_rao([A, B])
        assert K.shape == (12, 2)
        for r in range(2):
            assert np.allclose(K[:, r], np.kron(A[:, r], B[:, r]), atol=1e-14), f"Column {r} differs"

    def test_khatri_rao_errors(self):
        with pytest.raises(ValueError):
            khatri_rao([])
        with pytest.raises(ValueError):
            khatri_rao([np.zeros((2, 2)), np.zeros((2, 3))])

    def test_khatri_rao_except_matches_unfolding(self):
        rng = np.random.default_rng(5)
        factors = [rng.standard_normal((I, 3)) for I in (4, 3, 5, 2)]
        Y = cp_tensor(factors)
        for n in range(4):
            B = khatri_rao_except(factors, n)
            assert np.allclose(unfold(Y, n), factors[n] @ B.T, atol=1e-12), f"Mode {n} ordering is wrong"

    def test_gram_hadamard_matches_explicit(self):
        rng = np.random.default_rng(6)
        factors = [rng.standard_normal((I, 4)) for I in (6, 5, 7)]
        for n in range(3):
            B = khatri_rao_except(factors, n)
            assert np.allclose(gram_hadamard(factors, skip=n), B.T @ B, atol=1e-10)

    def test_gram_hadamard_without_skip(self):
        factors = [np.eye(3), 2 * np.eye(3)]
        assert np.array_equal(gram_hadamard(factors), 4 * np.eye(3))


class TestFit:
    """Reconstruction fit and input validation."""

    def test_frobenius_norm_any_order(self):
        assert frobenius_norm(np.full((2, 2, 2, 2), 0.5)) == pytest.approx(2.0)
        assert frobenius_norm(np.array([3.0, 4.0])) == 5.0

    def test_exact_match(self):
        Y = np.arange(1.0, 9.0).reshape(2, 2, 2)
        assert fit(Y, Y.copy()) == 1.0

    def test_zero_estimate(self):
        Y = np.arange(1.0, 9.0).reshape(2, 2, 2)
        assert fit(Y, 0) == pytest.approx(0.0)

    def test_known_value(self):
        Y = np.array([3.0, 4.0])
        assert fit(Y, np.array([3.0, 3.5])) == pytest.approx(0.9)

    def test_zero_reference(self):
        with pytest.raises(ValueError):
            fit(np.zeros((2, 2)), np.ones((2, 2)))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            fit(np.ones((2, 2)), np.ones((2, 3)))

    def test_as_tensor_validation(self):
        with pytest.raises(ValueError):
            as_tensor(3.0)
        with pytest.raises(ValueError):
            as_tensor(np.zeros((2, 0)))
        with pytest.raises(TypeError):
            as_tensor(["a", "b"])
        assert as_tensor([1, 2, 3]).dtype == np.float64

    def test_principal_angles_same_range(self):
        rng = np.random.default_rng(7)
        A = rng.standard_normal((10, 3))
        B = A @ rng.standard_normal((3, 3))
        assert np.max(principal_angles(A, B)) < 1e-8
