"""Dense tensor algebra: permutation, reshape, contraction, truncated SVD."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qkptn import tensor
from qkptn.errors import (
    ContractionMismatchError,
    InvalidArgumentError,
    InvalidPermutationError,
    InvalidReshapeError,
)

RNG = np.random.default_rng(12345)


def rand_tensor(shape):
    return (RNG.standard_normal(shape) + 1j * RNG.standard_normal(shape)).astype(
        tensor.DTYPE
    )


class TestPermute:
    def test_identity_perm(self):
        t = rand_tensor((2, 3, 4))
        out = tensor.permute(t, (0, 1, 2))
        np.testing.assert_array_equal(out, t)

    def test_transpose_matches_loop_oracle(self):
        t = rand_tensor((2, 3))
        out = tensor.permute(t, (1, 0))
        for i in range(2):
            for j in range(3):
                assert out[j, i] == t[i, j]

    def test_inverse_round_trip(self):
        t = rand_tensor((2, 3, 4, 5))
        perm = (2, 0, 3, 1)
        inv = np.argsort(perm)
        back = tensor.permute(tensor.permute(t, perm), inv)
        np.testing.assert_array_equal(back, t)

    def test_bad_perm_rejected(self):
        t = rand_tensor((2, 3))
        with pytest.raises(InvalidPermutationError):
            tensor.permute(t, (0,))
        with pytest.raises(InvalidPermutationError):
            tensor.permute(t, (0, 0))


class TestReshape:
    def test_row_major_grouping(self):
        t = rand_tensor((2, 2, 2))
        out = tensor.reshape(t, [[0], [1, 2]])
        assert out.shape == (2, 4)
        np.testing.assert_array_equal(out.ravel(), t.ravel())

    def test_inverse_reshape(self):
        t = rand_tensor((2, 3, 4))
        flatish = tensor.reshape(t, [[0, 1], [2]])
        back = flatish.reshape(2, 3, 4)
        np.testing.assert_array_equal(back, t)

    def test_grouped_matrix_contraction_equals_tensor_contraction(self):
        a = rand_tensor((2, 3, 4, 5))
        b = rand_tensor((4, 5, 6))
        via_group = tensor.reshape(a, [[0, 1], [2, 3]]) @ tensor.reshape(
            b, [[0, 1], [2]]
        )
        direct = tensor.contract(a, b, [(2, 0), (3, 1)])
        np.testing.assert_allclose(
            via_group, tensor.reshape(direct, [[0, 1], [2]]), atol=1e-12
        )

    def test_bad_partition_rejected(self):
        t = rand_tensor((2, 3, 4))
        with pytest.raises(InvalidReshapeError):
            tensor.reshape(t, [[0, 2], [1]])
        with pytest.raises(InvalidReshapeError):
            tensor.reshape(t, [[0], [1]])


class TestContract:
    def test_identity_on_vector(self):
        out = tensor.contract(np.eye(2), np.array([3.0, 4.0]), [(1, 0)])
        np.testing.assert_allclose(out, [3, 4])

    def test_small_matrix_case(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        b = np.array([[1.0], [0.0]])
        out = tensor.contract(a, b, [(1, 0)])
        np.testing.assert_allclose(out, [[1], [3]])

    def test_full_self_contraction_is_norm_squared(self):
        t = rand_tensor((3, 4, 2))
        out = tensor.contract(t, np.conj(t), [(0, 0), (1, 1), (2, 2)])
        assert out.shape == ()
        assert abs(out.imag) < 1e-12
        assert out.real >= 0
        np.testing.assert_allclose(out.real, np.linalg.norm(t) ** 2, atol=1e-10)

    def test_mismatch_rejected(self):
        with pytest.raises(ContractionMismatchError):
            tensor.contract(rand_tensor((2, 3)), rand_tensor((4, 2)), [(1, 0)])
        with pytest.raises(ContractionMismatchError):
            tensor.contract(rand_tensor((2, 2)), rand_tensor((2, 2)), [(0, 0), (0, 1)])

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(-3, 3))
    def test_bilinearity(self, seed, alpha):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((3, 4))
        b = rng.standard_normal((3, 4))
        c = rng.standard_normal((4, 2))
        lhs = tensor.contract(alpha * a + b, c, [(1, 0)])
        rhs = alpha * tensor.contract(a, c, [(1, 0)]) + tensor.contract(b, c, [(1, 0)])
        np.testing.assert_allclose(lhs, rhs, atol=1e-12 * max(1, abs(alpha)) * 100)


class TestSvdTruncated:
    def test_rank_one_outer_product(self):
        t = np.outer([1.0, 2.0], [3.0, 4.0])
        r = tensor.svd_truncated(t, 1, chi_max=4)
        nonzero = r.s[r.s > 1e-12]
        assert len(nonzero) == 1
        np.testing.assert_allclose(nonzero[0], np.sqrt(5) * 5, atol=1e-12)
        assert r.truncation_error == pytest.approx(0.0, abs=1e-12)

    def test_identity_chi_one(self):
        r = tensor.svd_truncated(np.eye(2), 1, chi_max=1)
        np.testing.assert_allclose(r.s, [1.0])
        assert r.truncation_error == pytest.approx(1.0, abs=1e-12)

    def test_truncation_error_from_full_svd(self):
        m = rand_tensor((4, 4))
        full_s = np.linalg.svd(m, compute_uv=False)
        r = tensor.svd_truncated(m, 1, chi_max=2)
        np.testing.assert_allclose(
            r.truncation_error, np.sqrt(full_s[2] ** 2 + full_s[3] ** 2), atol=1e-12
        )

    def test_orthonormal_factors(self):
        t = rand_tensor((2, 3, 4))
        r = tensor.svd_truncated(t, 2, chi_max=3)
        np.testing.assert_allclose(
            r.u.conj().T @ r.u, np.eye(r.kept), atol=1e-10
        )
        np.testing.assert_allclose(
            r.v_dag @ r.v_dag.conj().T, np.eye(r.kept), atol=1e-10
        )

    def test_recomposition_error_matches(self):
        m = rand_tensor((5, 6))
        r = tensor.svd_truncated(m, 1, chi_max=3)
        approx = r.u @ np.diag(r.s) @ r.v_dag
        np.testing.assert_allclose(
            np.linalg.norm(m - approx), r.truncation_error, atol=1e-10
        )

    def test_zero_matrix_keeps_one_zero_value(self):
        r = tensor.svd_truncated(np.zeros((3, 3)), 1, chi_max=2)
        assert r.kept == 1
        np.testing.assert_allclose(r.s, [0.0])

    def test_chi_zero_rejected(self):
        with pytest.raises(InvalidArgumentError):
            tensor.svd_truncated(np.eye(2), 1, chi_max=0)

    def test_descending_spectrum(self):
        m = rand_tensor((6, 6))
        r = tensor.svd_truncated(m, 1, chi_max=6)
        assert np.all(np.diff(r.s) <= 0)
        assert np.all(r.s >= 0)

    def test_frobenius_optimality_spot_check(self):
        rng = np.random.default_rng(99)
        for _ in range(100):
            m = rng.standard_normal((6, 6))
            k = int(rng.integers(1, 6))
            r = tensor.svd_truncated(m, 1, chi_max=k, rel_tol=0.0)
            best = np.linalg.norm(m - r.u @ np.diag(r.s) @ r.v_dag)
            for _ in range(20):
                a = rng.standard_normal((6, k)) @ rng.standard_normal((k, 6))
                assert best <= np.linalg.norm(m - a) + 1e-9
