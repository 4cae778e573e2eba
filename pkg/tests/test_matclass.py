from __future__ import annotations

import itertools

import numpy as np
import pytest

from conftest import MONOSTABLE_W
from ltnet.errors import LimitExceeded
from ltnet.linalg import Verdict, principal_pivot_transform, principal_submatrix
from ltnet.matclass import (certify, hierarchy_consistency, is_absolutely_schur,
                            is_norm_contractive, is_p_matrix, is_totally_hurwitz,
                            is_totally_l_stable, verify_lyapunov)

REMARK_A = np.array([[-1.0, -5.0, 0.0], [0.0, -1.0, -6.0], [-1.0, 0.0, -1.0]])


def sdp_gap(W):
    """Optimal value of min t s.t. (-I+SW)^T P + P(-I+SW) <= tI, tr P = 1, P >= 0."""
    cp = pytest.importorskip("cvxpy")
    n = W.shape[0]
    P = cp.Variable((n, n), symmetric=True)
    t = cp.Variable()
    cons = [P >> 1e-6 * np.eye(n), cp.trace(P) == 1]
    for s in itertools.product((0.0, 1.0), repeat=n):
        A = -np.eye(n) + np.diag(s) @ W
        cons.append(A.T @ P + P @ A << t * np.eye(n))
    cp.Problem(cp.Minimize(t), cons).solve()
    return float(t.value)


class TestPMatrix:
    def test_identity(self):
        assert is_p_matrix(np.eye(4)).verdict is Verdict.TRUE

    def test_wilson_cowan_example(self):
        assert is_p_matrix(np.eye(2) - MONOSTABLE_W)

    def test_witness_is_first_violating_set(self):
        A = np.array([[1.0, 2.0, 0.0], [2.0, 1.0, 0.0], [0.0, 0.0, -1.0]])
        res = is_p_matrix(A)
        assert res.verdict is Verdict.FALSE
        assert res.witness == (2,)
        assert np.linalg.det(principal_submatrix(A, res.witness)) <= 0

    def test_witness_recomputes_nonpositive(self, rng):
        for _ in range(50):
            A = rng.normal(size=(4, 4))
            res = is_p_matrix(A)
            if res.verdict is Verdict.FALSE:
                assert np.linalg.det(principal_submatrix(A, res.witness)) < 0

    def test_marginal(self):
        assert is_p_matrix(np.diag([1.0, 0.0])).verdict is Verdict.MARGINAL

    def test_limit(self):
        with pytest.raises(LimitExceeded, match="limit of 20"):
            is_p_matrix(np.eye(21))

    def test_inverse_and_pivot_preserve_p(self, rng):
        seen = 0
        for _ in range(300):
            A = rng.normal(size=(4, 4)) + 1.5 * np.eye(4)
            verdict = is_p_matrix(A).verdict
            if verdict is Verdict.MARGINAL:
                continue
            seen += verdict is Verdict.TRUE
            assert is_p_matrix(np.linalg.inv(A)).verdict is verdict
            assert is_p_matrix(principal_pivot_transform(A, (1, 3))).verdict is verdict
        assert seen > 20


class TestHurwitz:
    def test_examples(self):
        assert is_totally_hurwitz(-np.eye(3))
        assert is_totally_hurwitz(-np.eye(2) + MONOSTABLE_W)
        res = is_totally_hurwitz(REMARK_A)
        assert res.verdict is Verdict.FALSE
        ev = np.linalg.eigvals(principal_submatrix(REMARK_A, res.witness))
        assert ev.real.max() >= 0

    def test_h_implies_minus_p(self, rng):
        for _ in range(300):
            A = rng.normal(size=(3, 3)) - 1.5 * np.eye(3)
            if is_totally_hurwitz(A):
                assert is_p_matrix(-A)


class TestSimpleClasses:
    def test_zero_matrix_in_every_class(self):
        cert = certify(np.zeros((3, 3)))
        assert all(v is Verdict.TRUE for v in cert.verdicts().values())

    def test_nilpotent_norm_marginal(self):
        W = np.array([[0.0, 0.0], [1.0, 0.0]])
        assert is_absolutely_schur(W)
        assert is_norm_contractive(W).verdict is Verdict.MARGINAL

    def test_minus_two_identity(self):
        W = -2 * np.eye(2)
        assert is_absolutely_schur(W).verdict is Verdict.FALSE
        assert is_totally_l_stable(W)

    def test_dale_law_norm_bounds_abs_spectral_radius(self, rng):
        for _ in range(200):
            W = np.abs(rng.normal(size=(5, 5))) * rng.choice([-1, 1], size=5)[None, :]
            assert np.linalg.norm(W, 2) >= max(abs(np.linalg.eigvals(np.abs(W)))) - 1e-9


class TestTotallyLStable:
    def test_contractive_matrix_certified_by_identity(self, rng):
        W = rng.normal(size=(4, 4))
        W *= 0.5 / np.linalg.norm(W, 2)
        assert verify_lyapunov(W, np.eye(4) / 4)
        res = is_totally_l_stable(W)
        assert res.verdict is Verdict.TRUE
        assert verify_lyapunov(W, res.witness)

    def test_hurwitz_but_not_l(self):
        W = np.array([[0.5, -3.0], [4.0, -1.0]])
        assert is_totally_hurwitz(-np.eye(2) + W)
        res = is_totally_l_stable(W)
        assert res.verdict is Verdict.FALSE and res.budget_limited

    def test_not_hurwitz_is_certified_false(self):
        res = is_totally_l_stable(np.array([[1.5, 0.0], [0.0, 0.0]]))
        assert res.verdict is Verdict.FALSE and not res.budget_limited

    def test_witness_reverifies(self, rng):
        for _ in range(20):
            W = rng.normal(0, 0.6, (4, 4))
            res = is_totally_l_stable(W)
            if res.verdict is Verdict.TRUE:
                P = res.witness
                assert np.allclose(P, P.T) and np.linalg.eigvalsh(P).min() > 0
                assert verify_lyapunov(W, P)

    def test_agrees_with_sdp_solver(self, rng):
        """The subgradient search and an interior-point SDP reach the same verdict."""
        checked = 0
        for _ in range(40):
            n = int(rng.integers(2, 5))
            W = rng.normal(0, 0.8, (n, n))
            gap = sdp_gap(W)
            if abs(gap) < 1e-3:
                continue
            checked += 1
            assert bool(is_totally_l_stable(W)) == (gap < 0)
        assert checked >= 30

    def test_limit(self):
        with pytest.raises(LimitExceeded):
            is_totally_l_stable(np.zeros((13, 13)))


class TestHierarchy:
    def test_random_contractive(self, rng):
        for _ in range(1000):
            W = rng.normal(size=(4, 4))
            W *= 0.9 / np.linalg.norm(W, 2)
            rep = hierarchy_consistency(W)
            assert rep.consistent

    def test_random_general(self, rng):
        for _ in range(100):
            rep = hierarchy_consistency(rng.normal(0, 0.7, (3, 3)))
            assert rep.consistent

    def test_certificate_report_lists_classes(self):
        text = certify(MONOSTABLE_W).report()
        for key in ("P-matrix", "Hurwitz", "L-stable", "Schur", "norm"):
            assert key in text

    def test_certify_limit(self):
        with pytest.raises(LimitExceeded):
            certify(np.zeros((25, 25)))
        assert certify(np.zeros((14, 14))).totally_l_stable is None
