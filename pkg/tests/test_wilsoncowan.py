from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import MONOSTABLE_W, BISTABLE_W
from ltnet.dynamics import simulate
from ltnet.linalg import Verdict
from ltnet.wilsoncowan import (WilsonCowanParams, analytic_conditions, inputs, random_params,
                               reduce)


class TestParams:
    def test_effective_round_trip(self):
        p = WilsonCowanParams.from_effective(0.9, -2, 5, -1.5, n=40, alpha=0.8)
        np.testing.assert_allclose(p.weight_matrix, MONOSTABLE_W)

    def test_explicit_weights(self):
        p = WilsonCowanParams(n=10, alpha=0.5, w_ee=0.18, w_ei=-0.4, w_ie=1.0, w_ii=-0.3)
        np.testing.assert_allclose(p.weight_matrix, MONOSTABLE_W)

    @pytest.mark.parametrize("kw", [dict(alpha=0.0), dict(alpha=1.0), dict(n=0.0),
                                    dict(w_ee=-1.0), dict(w_ei=1.0), dict(w_ie=0.0), dict(w_ii=0.5),
                                    dict(m_e=0.0)])
    def test_rejects_invalid(self, kw):
        base = dict(n=10, alpha=0.5, w_ee=0.1, w_ei=-0.1, w_ie=0.1, w_ii=-0.1)
        with pytest.raises(ValueError):
            WilsonCowanParams(**{**base, **kw})

    def test_reduce(self):
        p = WilsonCowanParams.from_effective(0.9, -2, 5, -1.5, d_e=1, d_i=1, m_e=3.0)
        net = reduce(p)
        assert net.labels == ("E", "I") and net.m[0] == 3.0 and np.isinf(net.m[1])
        np.testing.assert_array_equal(inputs(p), [1, 1])


class TestConditions:
    def test_monostable(self):
        rep = analytic_conditions(WilsonCowanParams.from_effective(0.9, -2, 5, -1.5))
        for name in ("P: I-W in P", "H: -I+W in H", "rho([W]_0^inf) < 1", "-I+W Hurwitz"):
            assert rep[name].analytic() is Verdict.TRUE
        # strong inhibitory self-coupling breaks the absolute Schur condition
        assert rep["rho(|W|) < 1"].analytic() is Verdict.FALSE
        assert rep.consistent()

    def test_bistable(self):
        rep = analytic_conditions(WilsonCowanParams.from_effective(1.1, -2, 5, -1.5))
        for name in ("P: I-W in P", "H: -I+W in H", "rho([W]_0^inf) < 1"):
            assert rep[name].analytic() is Verdict.FALSE
        assert rep.consistent()

    def test_weak_couplings_abs_schur(self):
        rep = analytic_conditions(WilsonCowanParams.from_effective(0.3, -0.2, 0.4, -0.5))
        assert rep["rho(|W|) < 1"].analytic() is Verdict.TRUE and rep.consistent()

    def test_hurwitz_without_exc_condition(self):
        rep = analytic_conditions(WilsonCowanParams.from_effective(1.1, -2, 5, -1.5))
        assert rep["-I+W Hurwitz"].analytic() is Verdict.TRUE

    @given(st.integers(0, 2**32 - 1))
    def test_agreement_on_random_draws(self, seed):
        p = random_params(np.random.default_rng(seed))
        rep = analytic_conditions(p)
        if rep.min_abs_margin() > 1e-6:
            assert rep.consistent(), rep.text()

    def test_unknown_condition(self):
        rep = analytic_conditions(WilsonCowanParams.from_effective(0.9, -2, 5, -1.5))
        with pytest.raises(KeyError):
            rep["nope"]

    def test_text(self):
        text = analytic_conditions(WilsonCowanParams.from_effective(0.9, -2, 5, -1.5)).text()
        assert text.splitlines()[0].startswith("W_EI = [[0.9, -2]")
        assert len(text.splitlines()) == 6


class TestSimulation:
    def test_bounded_beyond_excitatory_condition(self):
        p = WilsonCowanParams.from_effective(1.1, -2, 5, -1.5, d_e=1, d_i=1)
        traj = simulate(reduce(p), inputs(p), [5.0, 5.0], 100.0)
        assert np.max(np.abs(traj.x)) < 1e6
