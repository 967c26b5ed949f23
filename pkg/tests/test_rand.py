"""
Test seeded streams, sketch matrices and the orthonormal basis routines.
"""

import numpy as np
import pytest

from fastcp.rand import (
    SeedSpec,
    as_seed,
    gaussian_matrix,
    gram_orthonormalize,
    gram_transform,
    orthonormal_basis,
    range_finder,
    sketch_matrix,
)
from fastcp.tensor import principal_angles


class TestSeedSpec:
    """Stream derivation."""

    def test_same_seed_same_numbers(self):
        a = gaussian_matrix(5, 3, SeedSpec(42, 7))
        b = gaussian_matrix(5, 3, SeedSpec(42, 7))
        assert np.array_equal(a, b)

    def test_streams_differ(self):
        a = gaussian_matrix(5, 3, SeedSpec(42, 7))
        b = gaussian_matrix(5, 3, SeedSpec(42, 8))
        c = gaussian_matrix(5, 3, SeedSpec(43, 7))
        assert not np.array_equal(a, b), "Different streams gave equal draws"
        assert not np.array_equal(a, c), "Different roots gave equal draws"

    def test_spawn_is_deterministic_and_distinct(self):
        seed = SeedSpec(1)
        assert seed.spawn(1, 2) == seed.spawn(1, 2)
        assert seed.spawn(1, 2) != seed.spawn(2, 1)
        assert seed.spawn(1, 2).root == 1

    def test_negative_keys_rejected(self):
        with pytest.raises(ValueError):
            SeedSpec(0, -1)
        with pytest.raises(ValueError):
            SeedSpec(0).spawn(-3)

    def test_as_seed(self):
        assert as_seed(None) == SeedSpec(0)
        assert as_seed(5) == SeedSpec(5)
        spec = SeedSpec(9, 3)
        assert as_seed(spec) is spec

    def test_gaussian_matrix_is_standard_normal(self):
        G = gaussian_matrix(10000, 10, SeedSpec(11))
        assert abs(G.mean()) < 0.015, f"Mean {G.mean():.4f}"
        assert abs(G.var() - 1.0) < 0.02, f"Variance {G.var():.4f}"

    def test_gaussian_matrix_shape_and_validation(self):
        assert gaussian_matrix(4, 2, SeedSpec(0)).shape == (4, 2)
        with pytest.raises(ValueError):
            gaussian_matrix(0, 2, SeedSpec(0))

    def test_gaussian_matrix_is_column_filled(self):
        """Adding columns keeps the earlier ones."""
        a = gaussian_matrix(6, 2, SeedSpec(3))
        b = gaussian_matrix(6, 4, SeedSpec(3))
        assert np.array_equal(a, b[:, :2])


class TestSketchMatrix:
    """Row-addressable Gaussian test matrices."""

    def test_full_shape(self):
        omega = sketch_matrix((3, 4, 2), 5, SeedSpec(0))
        assert omega.shape == (24, 5)

    def test_block_matches_full_rows(self):
        dims = (4, 3, 5)
        seed = SeedSpec(11, 2)
        full = sketch_matrix(dims, 6, seed)
        ranges = [range(1, 3), range(0, 2), range(2, 5)]
        block = sketch_matrix(dims, 6, seed, ranges)

        grids = np.meshgrid(*[np.asarray(r) for r in ranges], indexing="ij")
        rows = np.ravel_multi_index(grids, dims, order="F").ravel(order="F")
        assert np.array_equal(block, full[rows]), "Block rows differ from the full matrix"

    def test_single_index_mode(self):
        full = sketch_matrix((7,), 3, SeedSpec(1))
        part = sketch_matrix((7,), 3, SeedSpec(1), [range(2, 5)])
        assert np.array_equal(part, full[2:5])

    def test_range_count_mismatch(self):
        with pytest.raises(ValueError):
            sketch_matrix((3, 3), 2, SeedSpec(0), [range(3)])


class TestOrthonormalBasis:
    """Canonical bases from QR and from Gram matrices."""

    def test_projection_residual(self):
        Z = np.random.default_rng(0).standard_normal((50, 5))
        Q = orthonormal_basis(Z)
        assert Q.shape == (50, 5)
        assert np.allclose(Q.T @ Q, np.eye(5), atol=1e-12)
        assert np.linalg.norm(Z - Q @ (Q.T @ Z)) < 1e-10

    def test_equals_left_singular_vectors(self):
        Z = np.random.default_rng(1).standard_normal((30, 4))
        Q = orthonormal_basis(Z)
        U, _, _ = np.linalg.svd(Z, full_matrices=False)
        assert np.allclose(np.abs(Q.T @ U), np.eye(4), atol=1e-8)

    def test_rank_deficient_columns_dropped(self):
        rng = np.random.default_rng(2)
        A = rng.standard_normal((20, 2))
        Z = np.hstack([A, A @ rng.standard_normal((2, 3))])
        Q = orthonormal_basis(Z)
        assert Q.shape[1] == 2, f"Expected effective rank 2, got {Q.shape[1]}"

    def test_zero_matrix(self):
        assert orthonormal_basis(np.zeros((6, 3))).shape == (6, 0)

    def test_gram_path_matches_qr_path(self):
        Z = np.random.default_rng(3).standard_normal((40, 5))
        blocks, w = gram_orthonormalize([Z[:17], Z[17:]])
        stacked = np.vstack(blocks)
        assert np.allclose(stacked, orthonormal_basis(Z), atol=1e-9), "Bases differ column by column"
        assert np.all(np.diff(w) <= 0), "Eigenvalues not in decreasing order"
        assert np.max(principal_angles(stacked, Z)) < 1e-8

    def test_nearly_deficient_rank_agrees_across_paths(self):
        rng = np.random.default_rng(6)
        U = np.linalg.qr(rng.standard_normal((40, 3)))[0]
        V = np.linalg.qr(rng.standard_normal((3, 3)))[0]
        Z = U @ np.diag([1.0, 1e-2, 1e-8]) @ V.T
        Q = orthonormal_basis(Z)
        blocks, w = gram_orthonormalize([Z[:25], Z[25:]])
        assert Q.shape[1] == 2, f"Direction at 1e-8 should be dropped, kept {Q.shape[1]} columns"
        assert w.size == Q.shape[1], "QR and Gram paths disagree on the effective rank"
        assert np.allclose(np.vstack(blocks), Q, atol=1e-8)

    def test_gram_transform_degenerate(self):
        transform, w = gram_transform(np.zeros((3, 3)))
        assert transform.shape == (3, 0)
        assert w.size == 0

    def test_gram_orthonormalize_errors(self):
        with pytest.raises(ValueError):
            gram_orthonormalize([])
        with pytest.raises(ValueError):
            gram_orthonormalize([np.ones((2, 2)), np.ones((2, 3))])


class TestRangeFinder:
    """Randomized range finder."""

    def test_exact_low_rank(self):
        rng = np.random.default_rng(4)
        M = rng.standard_normal((60, 5)) @ rng.standard_normal((5, 40))
        Q = range_finder(M, 8, SeedSpec(0))
        assert Q.shape[1] == 5, "Effective rank should equal the true rank"
        assert np.linalg.norm(M - Q @ (Q.T @ M)) < 1e-9 * np.linalg.norm(M)

    def test_noisy_low_rank_close_to_svd(self):
        rng = np.random.default_rng(5)
        M = rng.standard_normal((80, 5)) @ rng.standard_normal((5, 60)) + 0.01 * rng.standard_normal((80, 60))
        Q = range_finder(M, 15, SeedSpec(1))
        s = np.linalg.svd(M, compute_uv=False)
        optimal = np.sqrt(np.sum(s[5:] ** 2))
        assert np.linalg.norm(M - Q @ (Q.T @ M)) <= 2.0 * optimal

    def test_needs_positive_columns(self):
        with pytest.raises(ValueError):
            range_finder(np.ones((3, 3)), 0, SeedSpec(0))
