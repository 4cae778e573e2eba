from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import MONOSTABLE_W, BISTABLE_W
from ltnet.dynamics import (PROBE_HORIZON, boundedness_probe, cluster_points, comparison_check,
                            default_step, fit_decay_rate, ges_probe, ges_survey, monotone_bound,
                            probe_horizon, simulate, simulate_batch)
from ltnet.equilibria import enumerate_equilibria
from ltnet.errors import StepSizeError
from ltnet.linalg import excitatory_part, spectral_radius
from ltnet.model import NetworkSpec
from ltnet.wilsoncowan import WilsonCowanParams, reduce


class TestSimulate:
    def test_equilibrium_is_fixed(self):
        net = NetworkSpec(MONOSTABLE_W)
        (eq,) = enumerate_equilibria(net, [1, 1])
        traj = simulate(net, [1, 1], eq.state, 10.0)
        assert np.max(np.abs(traj.x - eq.state)) < 1e-8

    def test_grid_is_uniform_and_ends_at_horizon(self):
        traj = simulate(NetworkSpec(MONOSTABLE_W), [1, 1], [0, 0], 3.3)
        assert traj.t[-1] == pytest.approx(3.3)
        assert np.allclose(np.diff(traj.t), traj.h)

    def test_step_too_large(self):
        with pytest.raises(StepSizeError):
            simulate(NetworkSpec(np.zeros((1, 1))), [0.0], [0.0], 1.0, h=0.1)

    def test_initial_state_outside_box(self):
        with pytest.raises(ValueError):
            simulate(NetworkSpec(np.zeros((2, 2)), [1, 1]), [0, 0], [2, 0], 1.0)

    def test_box_invariance(self, rng):
        for _ in range(20):
            m = rng.uniform(0.5, 2, 3)
            net = NetworkSpec(rng.normal(0, 2, (3, 3)), m)
            traj = simulate(net, rng.normal(0, 3, 3), rng.uniform(0, 1, 3) * m, 5.0)
            assert np.all(traj.x >= -1e-9) and np.all(traj.x <= m + 1e-9)

    def test_time_varying_input(self):
        net = NetworkSpec(np.zeros((1, 1)))
        traj = simulate(net, lambda t: [1.0 + np.sin(t)], [1.0], 2.0)
        assert traj.input_kind == "sampled"
        assert traj.inputs[-1, 0] == pytest.approx(1 + np.sin(2.0))

    def test_fourth_order_convergence(self):
        # stays in the all-linear region: W contractive, positive drive, positive start
        W = np.array([[0.2, 0.1], [-0.1, 0.3]])
        net = NetworkSpec(W)
        d, x0 = np.array([1.0, 1.0]), np.array([0.5, 0.5])
        exact_A = -np.eye(2) + W
        xstar = np.linalg.solve(-exact_A, d)
        w, V = np.linalg.eig(exact_A)
        exact = xstar + (V @ np.diag(np.exp(w * 2.0)) @ np.linalg.solve(V, x0 - xstar)).real
        errs = [np.max(np.abs(simulate(net, d, x0, 2.0, h).final - exact)) for h in (0.05, 0.025)]
        assert errs[0] / errs[1] == pytest.approx(16, rel=0.15)

    def test_batch_matches_single(self, rng):
        net = NetworkSpec(BISTABLE_W)
        X0 = rng.uniform(0, 1, (5, 2))
        _, X = simulate_batch(net, [-0.01, -1], X0, 4.0)
        for k in range(5):
            np.testing.assert_allclose(X[:, k], simulate(net, [-0.01, -1], X0[k], 4.0).x, atol=1e-14)

    def test_csv_header(self):
        text = simulate(NetworkSpec(MONOSTABLE_W), [1, 1], [0, 0], 0.5).to_csv()
        assert text.splitlines()[1] == "t,x0,x1"


class TestComparison:
    def test_excitatory_network_identical(self):
        W = np.array([[0.2, 0.3], [0.1, 0.4]])
        res = comparison_check(NetworkSpec(W), [1, 0.5], [0.2, 0.1], 5.0)
        assert res.holds and res.max_excess == 0.0

    def test_monostable(self):
        assert comparison_check(NetworkSpec(MONOSTABLE_W), [1, 1], [1, 1], 10.0).holds

    def test_requires_unbounded(self):
        with pytest.raises(ValueError):
            comparison_check(NetworkSpec(MONOSTABLE_W, [1, 1]), [1, 1], [0, 0], 1.0)


class TestBoundedness:
    def test_inhibitory_only(self):
        W = -np.abs(np.random.default_rng(0).normal(size=(3, 3)))
        np.testing.assert_allclose(monotone_bound(NetworkSpec(W), [1, -2, 3]), [1, 0, 3])

    def test_wilson_cowan_bounded(self):
        p = WilsonCowanParams.from_effective(0.9, -2, 5, -1.5)
        res = boundedness_probe(reduce(p), [1, 1])
        assert res.bounded is True and res.nu is not None

    def test_wilson_cowan_weaker_condition(self):
        p = WilsonCowanParams.from_effective(1.1, -2, 5, -1.5)
        res = boundedness_probe(reduce(p), [1, 1])
        assert res.bounded is None
        assert res.simulation_bounded

    def test_finite_caps_bound_by_m(self):
        net = NetworkSpec(np.array([[2.0, 0.0], [0.0, 2.0]]), [1.0, 3.0])
        np.testing.assert_allclose(monotone_bound(net, [1, 1]), [1, 3])

    def test_no_bound(self):
        assert monotone_bound(NetworkSpec(np.array([[2.0]])), [1.0]) is None


class TestClusteringAndRates:
    def test_cluster_points(self):
        pts = np.array([[0, 0], [5e-5, 0], [1, 1], [1, 1 + 5e-5], [1, 1 + 1.5e-4]])
        assert cluster_points(pts) == [[0, 1], [2, 3, 4]]

    @given(st.floats(0.1, 5.0))
    def test_rate_of_pure_exponential(self, lam):
        t = np.linspace(0, 40 / lam, 2000)
        assert fit_decay_rate(t, np.exp(-lam * t)) == pytest.approx(-lam, rel=1e-9)

    def test_rate_missing_when_window_empty(self):
        assert fit_decay_rate(np.arange(5.0), np.ones(5)) is None


class TestGesProbe:
    def test_zero_weights(self):
        net = NetworkSpec(np.zeros((3, 3)), tau=2.0)
        probe = ges_probe(net, [1.0, -1.0, 0.5])
        assert probe.single_attractor
        np.testing.assert_allclose(probe.clusters[0], [1.0, 0.0, 0.5], atol=1e-6)
        assert probe.rate == pytest.approx(-0.5, rel=1e-3)

    def test_contractive_network(self, rng):
        W = rng.normal(size=(4, 4))
        W *= 0.5 / np.linalg.norm(W, 2)
        probe = ges_probe(NetworkSpec(W), rng.normal(size=4))
        assert probe.single_attractor and probe.rate < 0

    def test_both_attractors_near_origin(self):
        g = np.linspace(0, 0.3, 12)
        initial = np.array([[a, b] for a in g for b in g])
        probe = ges_probe(NetworkSpec(BISTABLE_W), [-0.01, -1], initial=initial)
        assert len(probe.clusters) >= 2
        assert probe.rate is None

    def test_reproducible(self):
        a = ges_probe(NetworkSpec(MONOSTABLE_W), [1, 1], trials=5, seed=3)
        b = ges_probe(NetworkSpec(MONOSTABLE_W), [1, 1], trials=5, seed=3)
        np.testing.assert_array_equal(a.initial, b.initial)
        np.testing.assert_array_equal(a.final, b.final)

    def test_survey_matches_individual_probes(self, rng):
        net = NetworkSpec(MONOSTABLE_W)
        D = rng.normal(size=(3, 2))
        batch = ges_survey(net, D, trials=4, seed=1)
        for d, probe in zip(D, batch):
            single = ges_probe(net, d, trials=4, seed=1)
            np.testing.assert_allclose(single.final, probe.final, atol=1e-9)

    def test_step_rule(self):
        assert default_step(NetworkSpec(np.zeros((2, 2)), tau=2.0)) == pytest.approx(0.1)


class TestClusterPointsOracle:
    @given(st.integers(0, 10_000), st.integers(1, 4))
    def test_matches_brute_force(self, seed, n):
        rng = np.random.default_rng(seed)
        pts = np.round(rng.uniform(0, 1e-3, (40, n)), 5)
        radius = 1e-4
        dist = np.max(np.abs(pts[:, None] - pts[None]), axis=2)
        parent = list(range(40))

        def find(i):
            while parent[i] != i:
                i = parent[i]
            return i

        for i, j in zip(*np.nonzero(dist <= radius)):
            parent[find(max(i, j))] = find(min(i, j))
        expected = {}
        for i in range(40):
            expected.setdefault(find(i), []).append(i)
        assert cluster_points(pts, radius) == sorted(expected.values(), key=lambda g: g[0])

    def test_many_coincident_points(self):
        pts = np.repeat([[0.0, 0.0], [1.0, 1.0]], 20_000, axis=0)
        groups = cluster_points(pts)
        assert [len(g) for g in groups] == [20_000, 20_000]


class TestProbeHorizon:
    def test_fast_network_uses_floor(self):
        assert probe_horizon(NetworkSpec(np.zeros((2, 2)), tau=2.0)) == PROBE_HORIZON * 2.0

    def test_slow_mode_extends_horizon(self):
        # -I + W has eigenvalue -0.01 on the first node
        W = np.diag([0.99, 0.0])
        assert probe_horizon(NetworkSpec(W)) == pytest.approx(4000.0)

    def test_slow_network_converges(self):
        probe = ges_probe(NetworkSpec(np.diag([0.99, 0.0])), [1.0, 1.0], trials=3)
        assert probe.single_attractor and probe.rate == pytest.approx(-0.01, rel=0.05)

    def test_unstable_mode_keeps_default(self):
        assert probe_horizon(NetworkSpec(BISTABLE_W)) == PROBE_HORIZON
