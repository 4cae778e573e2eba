from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from ltnet.errors import ShapeError
from ltnet.linalg import (Verdict, as_matrix, excitatory_part, index_sets, least_squares_solve,
                          operator_norm, principal_pivot_transform, principal_submatrix, rank,
                          spectral_radius, stacked_principal_submatrices)
from ltnet.matclass import is_p_matrix

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


class TestVerdict:
    @pytest.mark.parametrize("value,expected", [(0.5, Verdict.TRUE), (1.5, Verdict.FALSE),
                                                (1.0, Verdict.MARGINAL), (1.0 - 1e-12, Verdict.MARGINAL)])
    def test_less_than(self, value, expected):
        assert Verdict.less_than(value, 1.0) is expected

    def test_truthiness(self):
        assert Verdict.TRUE and not Verdict.FALSE and not Verdict.MARGINAL

    def test_all_of(self):
        assert Verdict.all_of([Verdict.TRUE, Verdict.MARGINAL]) is Verdict.MARGINAL
        assert Verdict.all_of([Verdict.MARGINAL, Verdict.FALSE]) is Verdict.FALSE
        assert Verdict.all_of([]) is Verdict.TRUE


class TestKernels:
    def test_as_matrix_rejects_bad_input(self):
        with pytest.raises(ShapeError):
            as_matrix([[1, 2, 3]], square=True)
        with pytest.raises(ShapeError):
            as_matrix([[np.nan]])
        with pytest.raises(ShapeError):
            as_matrix(np.zeros((2, 2, 2)))

    def test_spectral_radius_of_rotation(self):
        assert spectral_radius([[0, -2], [2, 0]]) == pytest.approx(2.0)

    def test_operator_norm_is_largest_singular_value(self):
        A = np.diag([3.0, -4.0, 1.0])
        assert operator_norm(A) == pytest.approx(4.0)

    def test_excitatory_part(self):
        np.testing.assert_array_equal(excitatory_part([[1, -2], [-3, 4]]), [[1, 0], [0, 4]])

    def test_index_sets_order(self):
        assert list(index_sets(3)) == [(0,), (1,), (2,), (0, 1), (0, 2), (1, 2), (0, 1, 2)]

    def test_stacked_submatrices_match_loop(self, rng):
        A = rng.normal(size=(5, 5))
        combos = [(0, 2), (1, 4), (3, 4)]
        stack = stacked_principal_submatrices(A, combos)
        for S, c in zip(stack, combos):
            np.testing.assert_array_equal(S, principal_submatrix(A, c))

    def test_rank(self):
        assert rank(np.outer([1, 2, 3], [1, 1])) == 1
        assert rank(np.zeros((3, 3))) == 0


class TestPrincipalPivot:
    @pytest.mark.parametrize("piv", [(0,), (1, 2), (0, 1, 2, 3)])
    def test_identity_is_fixed(self, piv):
        np.testing.assert_allclose(principal_pivot_transform(np.eye(4), piv), np.eye(4))

    def test_full_pivot_is_inverse(self, rng):
        A = rng.normal(size=(3, 3)) + 3 * np.eye(3)
        np.testing.assert_allclose(principal_pivot_transform(A, (0, 1, 2)), np.linalg.inv(A))

    def test_involution(self, rng):
        for _ in range(20):
            A = rng.normal(size=(4, 4))
            piv = tuple(sorted(rng.choice(4, size=2, replace=False)))
            np.testing.assert_allclose(
                principal_pivot_transform(principal_pivot_transform(A, piv), piv), A, atol=1e-9)

    def test_preserves_p_matrices(self, rng):
        found = 0
        while found < 20:
            A = rng.normal(size=(3, 3)) + 2 * np.eye(3)
            if not is_p_matrix(A):
                continue
            found += 1
            for piv in [(0,), (1, 2), (0, 2)]:
                assert is_p_matrix(principal_pivot_transform(A, piv))

    def test_singular_pivot_block(self):
        with pytest.raises(np.linalg.LinAlgError):
            principal_pivot_transform(np.array([[1.0, 2.0], [3.0, 0.0]]), (1,))


class TestLeastSquares:
    def test_exact_system(self, rng):
        A = rng.normal(size=(4, 4))
        X = rng.normal(size=(4, 2))
        sol, res = least_squares_solve(A, A @ X)
        np.testing.assert_allclose(sol, X, atol=1e-9)
        assert res < 1e-9

    def test_minimum_norm_when_underdetermined(self):
        sol, res = least_squares_solve(np.array([[1.0, 1.0]]), np.array([2.0]))
        np.testing.assert_allclose(sol, [1.0, 1.0])
        assert res < 1e-12

    def test_inconsistent_system_reports_residual(self):
        _, res = least_squares_solve(np.array([[1.0], [1.0]]), np.array([[2.0, 0.0], [3.0, 0.0]]))
        assert res == pytest.approx(np.sqrt(0.5))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            least_squares_solve(np.eye(2), np.ones(3))

    @given(arrays(float, (3, 3), elements=finite))
    def test_residual_matches_definition(self, A):
        Y = np.arange(6, dtype=float).reshape(3, 2)
        X, res = least_squares_solve(A, Y)
        assert res == pytest.approx(np.linalg.norm(A @ X - Y), abs=1e-8)
