"""
Test Tucker models and the HOSVD, Tucker-ALS and randomized compressors.
"""

import numpy as np
import pytest

from fastcp.rand import SeedSpec
from fastcp.tensor import fit, multi_ttm, principal_angles, unfold
from fastcp.tucker import (
    TuckerModel,
    hosvd,
    leading_left_singular_vectors,
    normalize_ranks,
    rand_tucker,
    rand_tucker_2i,
    reconstruct,
    tucker_als,
)


def low_rank_tensor(dims, ranks, seed=0, noise=0.0):
    """Gaussian Tucker tensor plus optional white noise."""
    rng = np.random.default_rng(seed)
    core = rng.standard_normal(ranks)
    factors = [rng.standard_normal((I, r)) for I, r in zip(dims, ranks)]
    Y = multi_ttm(core, factors)
    return Y + noise * rng.standard_normal(dims) if noise else Y


def svd_oracle_fit(Y, ranks):
    """Fit of the truncated HOSVD computed with plain dense SVDs."""
    U = [np.linalg.svd(unfold(Y, n), full_matrices=False)[0][:, :r] for n, r in enumerate(ranks)]
    core = multi_ttm(Y, U, transpose=True)
    return fit(Y, multi_ttm(core, U))


class TestTuckerModel:
    """Model container and reconstruction."""

    def test_order_two_is_matrix_product(self):
        rng = np.random.default_rng(0)
        G = rng.standard_normal((2, 3))
        U1 = rng.standard_normal((4, 2))
        U2 = rng.standard_normal((5, 3))
        model = TuckerModel(G, [U1, U2])
        assert np.allclose(reconstruct(model), U1 @ G @ U2.T, atol=1e-12)
        assert model.shape == (4, 5)
        assert model.ranks == (2, 3)

    def test_factor_count_mismatch(self):
        with pytest.raises(ValueError):
            TuckerModel(np.ones((2, 2)), [np.ones((3, 2))])

    def test_factor_columns_mismatch(self):
        with pytest.raises(ValueError):
            TuckerModel(np.ones((2, 2)), [np.ones((3, 2)), np.ones((3, 3))])

    def test_normalize_ranks(self):
        assert normalize_ranks((4, 5, 6), 3) == [3, 3, 3]
        assert normalize_ranks((4, 5), (1, 2)) == [1, 2]
        with pytest.raises(ValueError):
            normalize_ranks((4, 5), (1, 2, 3))
        with pytest.raises(ValueError):
            normalize_ranks((4, 5), (0, 2))


class TestHosvd:
    """Deterministic baselines."""

    def test_exact_multilinear_rank_recovered(self):
        Y = low_rank_tensor((8, 9, 10), (2, 3, 4))
        model = hosvd(Y, (2, 3, 4))
        assert fit(Y, reconstruct(model)) > 1 - 1e-10
        for n, U in enumerate(model.factors):
            assert np.allclose(U.T @ U, np.eye(U.shape[1]), atol=1e-10), f"Factor {n} not orthonormal"

    def test_matches_dense_svd_oracle(self):
        Y = low_rank_tensor((20, 20, 20), (5, 5, 5), seed=1, noise=0.1)
        model = hosvd(Y, 5)
        assert abs(fit(Y, reconstruct(model)) - svd_oracle_fit(Y, (5, 5, 5))) < 1e-6

    def test_rank_above_dimension(self):
        with pytest.raises(ValueError):
            hosvd(np.ones((3, 4)), (4, 2))

    def test_leading_vectors_wide_path(self):
        """Wide matrices use the Gram eigendecomposition."""
        M = np.random.default_rng(2).standard_normal((6, 30))
        U = leading_left_singular_vectors(M, 3)
        reference = np.linalg.svd(M, full_matrices=False)[0][:, :3]
        assert U.shape == (6, 3)
        assert np.allclose(np.abs(U.T @ reference), np.eye(3), atol=1e-8)

    def test_leading_vectors_largest_entry_positive(self):
        for M in (np.random.default_rng(3).standard_normal((6, 30)),
                  np.random.default_rng(4).standard_normal((30, 6))):
            U = leading_left_singular_vectors(M, 3)
            idx = np.argmax(np.abs(U), axis=0)
            assert np.all(U[idx, np.arange(3)] > 0)

    def test_fit_grows_with_rank(self):
        Y = low_rank_tensor((14, 13, 12), (4, 4, 4), seed=21, noise=0.5)
        fits = [fit(Y, reconstruct(hosvd(Y, r))) for r in range(1, 7)]
        assert all(b >= a - 1e-12 for a, b in zip(fits, fits[1:])), fits
        assert fit(Y, reconstruct(hosvd(Y, (2, 5, 2)))) >= fit(Y, reconstruct(hosvd(Y, (2, 2, 2)))) - 1e-12

    def test_tucker_als_not_worse_than_hosvd(self):
        Y = low_rank_tensor((15, 15, 15), (4, 4, 4), seed=3, noise=0.5)
        base = fit(Y, reconstruct(hosvd(Y, 3)))
        refined = fit(Y, reconstruct(tucker_als(Y, 3, iters=3)))
        assert refined >= base - 1e-12, f"Tucker-ALS fit {refined} below HOSVD {base}"

    def test_tucker_als_zero_iterations_is_hosvd(self):
        Y = low_rank_tensor((6, 7, 8), (2, 2, 2), seed=4, noise=0.1)
        a = tucker_als(Y, 2, iters=0)
        b = hosvd(Y, 2)
        assert np.allclose(a.core, b.core)


class TestRandTucker:
    """Randomized compressors."""

    def test_exact_rank_recovery(self):
        Y = low_rank_tensor((20, 20, 20), (3, 3, 3), seed=5)
        model = rand_tucker(Y, 3, p=2, seed=SeedSpec(1))
        assert fit(Y, reconstruct(model)) > 1 - 1e-8

    def test_core_dimensions_are_rank_plus_oversampling(self):
        Y = np.random.default_rng(6).standard_normal((12, 11, 10))
        model = rand_tucker(Y, (2, 3, 4), p=2, seed=0)
        assert model.ranks == (4, 5, 6)

    def test_rank_deficiency_shrinks_core(self):
        Y = low_rank_tensor((20, 20, 20), (2, 2, 2), seed=7)
        model = rand_tucker(Y, 3, p=3, seed=0)
        assert model.ranks == (2, 2, 2), f"Expected effective ranks (2, 2, 2), got {model.ranks}"

    def test_reproducible(self):
        Y = low_rank_tensor((10, 10, 10), (2, 2, 2), seed=8, noise=0.1)
        a = rand_tucker(Y, 2, p=2, seed=SeedSpec(3))
        b = rand_tucker(Y, 2, p=2, seed=SeedSpec(3))
        assert np.array_equal(a.core, b.core)

    def test_2i_exact_and_orthonormal(self):
        Y = low_rank_tensor((15, 16, 17), (3, 2, 4), seed=9)
        model = rand_tucker_2i(Y, (3, 2, 4), p=2, seed=SeedSpec(4))
        assert fit(Y, reconstruct(model)) > 1 - 1e-8
        for U in model.factors:
            assert np.allclose(U.T @ U, np.eye(U.shape[1]), atol=1e-10)

    def test_2i_subspaces_close_to_hosvd(self):
        Y = low_rank_tensor((30, 30, 30), (4, 4, 4), seed=10, noise=0.05)
        model = rand_tucker_2i(Y, 4, p=0, seed=SeedSpec(5))
        reference = hosvd(Y, 4)
        for U, V in zip(model.factors, reference.factors):
            assert np.max(principal_angles(U, V)) < 1e-2

    def test_2i_fit_close_to_hosvd_under_noise(self):
        Y = low_rank_tensor((30, 30, 30), (5, 5, 5), seed=11, noise=1.0)
        model = rand_tucker_2i(Y, 5, p=0, seed=SeedSpec(6))
        assert abs(fit(Y, reconstruct(model)) - fit(Y, reconstruct(hosvd(Y, 5)))) < 0.01

    def test_one_pass_fit_close_to_hosvd_under_noise(self):
        Y = low_rank_tensor((30, 30, 30), (5, 5, 5), seed=22, noise=5.0)
        model = rand_tucker(Y, 5, p=5, seed=SeedSpec(7))
        assert abs(fit(Y, reconstruct(model)) - fit(Y, reconstruct(hosvd(Y, 5)))) < 0.05

    def test_2i_not_worse_than_one_pass(self):
        Y = low_rank_tensor((25, 25, 25), (4, 4, 4), seed=23, noise=3.0)
        for root in range(10):
            one_pass = fit(Y, reconstruct(rand_tucker(Y, 4, p=2, seed=SeedSpec(root))))
            two_pass = fit(Y, reconstruct(rand_tucker_2i(Y, 4, p=2, seed=SeedSpec(root))))
            assert two_pass >= one_pass - 0.02, f"seed {root}: {two_pass} < {one_pass}"
