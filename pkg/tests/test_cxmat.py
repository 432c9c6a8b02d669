import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thzris.cxmat import matmul, null_space_basis, solve_hpd, unit_modulus
from thzris.errors import RejectedInputError, SingularityError

from helpers import crandn


def triple_loop(a, b):
    out = np.zeros((a.shape[0], b.shape[1]), dtype=complex)
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            for k in range(a.shape[1]):
                out[i, j] += a[i, k] * b[k, j]
    return out


class TestMatmul:
    def test_identity(self):
        a = crandn(np.random.default_rng(0), 2, 2)
        np.testing.assert_array_equal(matmul(np.eye(2), a), a)

    def test_row_swap(self):
        a = np.array([[1, 2], [3, 4]], dtype=complex)
        np.testing.assert_array_equal(matmul([[0, 1], [1, 0]], a), [[3, 4], [1, 2]])

    def test_against_triple_loop(self):
        rng = np.random.default_rng(1)
        a, b = crandn(rng, 3, 4), crandn(rng, 4, 2)
        np.testing.assert_allclose(matmul(a, b), triple_loop(a, b), rtol=0, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(RejectedInputError):
            matmul(np.ones((2, 3)), np.ones((2, 3)))

    def test_non_finite(self):
        with pytest.raises(RejectedInputError):
            matmul([[np.nan]], [[1.0]])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_associative(self, m, n, p, q, seed):
        rng = np.random.default_rng(seed)
        a, b, c = crandn(rng, m, n), crandn(rng, n, p), crandn(rng, p, q)
        left, right = matmul(matmul(a, b), c), matmul(a, matmul(b, c))
        assert np.linalg.norm(left - right) <= 1e-10 * max(np.linalg.norm(left), 1e-300)


class TestSolveHpd:
    def test_identity(self):
        v = np.array([1 + 2j, -3j, 0.5])
        np.testing.assert_allclose(solve_hpd(np.eye(3), v), v)

    def test_scalar_matrix(self):
        np.testing.assert_allclose(solve_hpd(2 * np.eye(3), np.ones(3)), [0.5, 0.5, 0.5])

    def test_random_residual(self):
        rng = np.random.default_rng(2)
        m = crandn(rng, 5, 5)
        a = m.conj().T @ m + np.eye(5)
        b = crandn(rng, 5)
        x = solve_hpd(a, b)
        assert np.linalg.norm(a @ x - b) / np.linalg.norm(b) <= 1e-10

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 64), st.integers(0, 2**32 - 1))
    def test_residual_property(self, n, seed):
        rng = np.random.default_rng(seed)
        m = crandn(rng, n, n)
        a = m.conj().T @ m + 0.1 * np.eye(n)
        b = crandn(rng, n)
        x = solve_hpd(a, b)
        assert np.linalg.norm(a @ x - b) / np.linalg.norm(b) <= 1e-10

    def test_non_hermitian_rejected(self):
        with pytest.raises(RejectedInputError):
            solve_hpd([[1, 1], [0, 1]], [1, 1])

    def test_indefinite_is_singular(self):
        with pytest.raises(SingularityError):
            solve_hpd(np.diag([1.0, -1.0]), [1, 1])


class TestNullSpace:
    def check_basis(self, a, basis):
        V = np.column_stack(basis)
        assert np.max(np.linalg.norm(a @ V, axis=0)) <= 1e-9
        np.testing.assert_allclose(V.conj().T @ V, np.eye(V.shape[1]), atol=1e-10)

    def test_canonical_rows(self):
        M, K = 5, 3
        a = np.eye(M)[: K - 1]
        basis = null_space_basis(a)
        assert len(basis) == M - K + 1
        V = np.column_stack(basis)
        # the span is exactly the trailing coordinate directions
        np.testing.assert_allclose(np.abs(V[: K - 1]), 0, atol=1e-12)
        np.testing.assert_allclose(np.linalg.svd(V[K - 1:], compute_uv=False), 1, atol=1e-12)

    def test_two_dimensional_complement(self):
        basis = null_space_basis(np.array([[1, 1]]) / np.sqrt(2))
        assert len(basis) == 1
        v = basis[0]
        target = np.array([1, -1]) / np.sqrt(2)
        assert abs(abs(np.vdot(target, v)) - 1) <= 1e-12

    def test_random_wide(self):
        a = crandn(np.random.default_rng(3), 3, 8)
        basis = null_space_basis(a)
        assert len(basis) == 5
        self.check_basis(a, basis)

    def test_rank_deficient_yields_more_vectors(self):
        rng = np.random.default_rng(4)
        row = crandn(rng, 1, 4)
        basis = null_space_basis(np.vstack([row, 2 * row]))
        assert len(basis) == 3
        self.check_basis(row, basis)

    def test_tall_rejected(self):
        with pytest.raises(RejectedInputError):
            null_space_basis(np.ones((3, 3)))

    def test_many_random(self):
        rng = np.random.default_rng(5)
        for _ in range(1000):
            cols = int(rng.integers(2, 9))
            rows = int(rng.integers(1, cols))
            a = crandn(rng, rows, cols)
            basis = null_space_basis(a)
            assert len(basis) == cols - rows
            self.check_basis(a, basis)


class TestUnitModulus:
    def test_three_four_five(self):
        assert abs(unit_modulus(3 + 4j) - (0.6 + 0.8j)) <= 1e-15

    def test_zero(self):
        assert unit_modulus(0) == 1 + 0j

    def test_idempotent(self):
        z = np.exp(0.7j)
        assert abs(unit_modulus(z) - z) <= 1e-15

    @given(st.complex_numbers(max_magnitude=1e150, allow_nan=False, allow_infinity=False))
    def test_modulus_one(self, z):
        assert abs(abs(unit_modulus(z)) - 1) <= 1e-15
