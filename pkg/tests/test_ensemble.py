from __future__ import annotations

import math

import numpy as np
import pytest

from ltnet.ensemble import (EnsembleConfig, class_probability_curve, sample_network, sample_rng,
                            sample_weights, spectral_scaling_fit)


class TestSampling:
    def test_deterministic(self):
        cfg = EnsembleConfig(seed=3)
        a = sample_network(cfg, 6, stream=1, sample=4).W
        b = sample_network(cfg, 6, stream=1, sample=4).W
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, sample_network(cfg, 6, stream=1, sample=5).W)

    def test_full_sparsity_gives_zero(self):
        cfg = EnsembleConfig(sparsity=1.0)
        assert not sample_network(cfg, 5).W.any()

    def test_zero_diagonal(self):
        W = sample_network(EnsembleConfig(sparsity=0.0), 8).W
        assert not np.diag(W).any()

    def test_column_signs(self):
        # every presynaptic node is either excitatory or inhibitory
        for s in range(20):
            W = sample_network(EnsembleConfig(), 10, sample=s).W
            for col in W.T:
                nz = col[col != 0]
                assert np.all(nz > 0) or np.all(nz < 0)

    def test_log_magnitude_statistics(self):
        cfg = EnsembleConfig(sparsity=0.0)
        vals = np.concatenate([np.abs(sample_weights(cfg, 10, sample_rng(0, 0, s)))[~np.eye(10, dtype=bool)]
                               for s in range(120)])
        assert vals.size >= 10_000
        assert np.log(vals).mean() == pytest.approx(-0.7, abs=0.1)
        assert np.log(vals).std() == pytest.approx(0.9, abs=0.05)

    def test_sparsity_rate(self):
        cfg = EnsembleConfig()
        W = np.stack([sample_network(cfg, 20, sample=s).W for s in range(50)])
        off = W[:, ~np.eye(20, dtype=bool)]
        assert np.mean(off == 0) == pytest.approx(0.2, abs=0.02)

    def test_excitatory_fraction(self):
        cfg = EnsembleConfig(sparsity=0.0)
        signs = np.concatenate([np.sign(sample_network(cfg, 20, sample=s).W[0, 1:]) for s in range(100)])
        assert np.mean(signs > 0) == pytest.approx(0.8, abs=0.03)

    @pytest.mark.parametrize("kw", [dict(sparsity=1.5), dict(excitatory=-0.1), dict(samples=0),
                                    dict(sigma=-1.0), dict(n_values=(0,))])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            EnsembleConfig(**kw)


class TestCurves:
    def test_small_ensemble(self):
        cfg = EnsembleConfig(n_values=(2, 4), samples=200)
        rep = class_probability_curve(cfg)
        assert [r.n for r in rep.rows] == [2, 4]
        assert rep.rows[0].p_matrix > 0.9
        for r in rep.rows:
            assert r.p_matrix_se == pytest.approx(math.sqrt(r.p_matrix * (1 - r.p_matrix) / 200))
            assert 0 <= r.abs_schur <= r.hurwitz + 3 * r.hurwitz_se + 1e-12

    def test_skips_class_tests_above_limit(self):
        rep = class_probability_curve(EnsembleConfig(n_values=(20,), samples=5))
        assert rep.rows[0].p_matrix is None and rep.rows[0].abs_schur is not None

    def test_mu_sweep(self):
        cfg = EnsembleConfig(n_values=(4,), samples=100, mu_values=(-3.0, 1.0))
        rows = class_probability_curve(cfg).rows
        assert [r.mu for r in rows] == [-3.0, 1.0]
        assert rows[0].p_matrix > rows[1].p_matrix

    def test_standard_error_matches_batch_spread(self):
        cfg = EnsembleConfig(n_values=(6,), samples=1000, seed=11)
        (row,) = class_probability_curve(cfg, class_tests=False).rows
        logs = []
        for s in range(1000):
            W = sample_weights(cfg, 6, sample_rng(11, 0, s))
            logs.append(np.log(max(np.max(np.abs(np.linalg.eigvals(np.abs(W)))), 1e-300)))
        batches = np.array(logs).reshape(10, 100).mean(axis=1)
        assert row.mean_log_rho_se == pytest.approx(batches.std(ddof=1) / math.sqrt(10), rel=0.6)

    def test_csv(self):
        text = class_probability_curve(EnsembleConfig(n_values=(2,), samples=10)).to_csv()
        lines = text.splitlines()
        assert lines[0] == "# ltnet ensemble csv v1" and len(lines) == 3


class TestScaling:
    def test_scale_shifts_intercept(self):
        cfg = EnsembleConfig(samples=50)
        a = spectral_scaling_fit(cfg, (4, 8, 16))
        b = spectral_scaling_fit(cfg, (4, 8, 16), scale=2.0)
        assert b.alpha == pytest.approx(a.alpha, abs=1e-9)
        assert b.beta - a.beta == pytest.approx(math.log(2), abs=1e-9)

    def test_needs_three_sizes(self):
        with pytest.raises(ValueError):
            spectral_scaling_fit(EnsembleConfig(samples=5), (4, 8, 8))

    def test_bad_statistic(self):
        with pytest.raises(ValueError):
            spectral_scaling_fit(EnsembleConfig(samples=5), (4, 8, 16), statistic="max")

    def test_growth_is_roughly_linear(self):
        fit = spectral_scaling_fit(EnsembleConfig(samples=100), (8, 16, 32))
        assert 0.7 < fit.alpha < 1.3


@pytest.fixture(scope="module")
def fits():
    cfg = EnsembleConfig(samples=300)
    ns = (8, 16, 32, 64, 128)
    return {s: spectral_scaling_fit(cfg, ns, statistic=s) for s in ("abs", "signed")}


class TestScalingStatistics:
    """The two spectral statistics grow at the same rate but differ in offset."""

    def test_signed_radius_fit(self, fits):
        fit = fits["signed"]
        assert 0.85 <= fit.alpha <= 1.15 and -1.35 <= fit.beta <= -1.05

    def test_abs_radius_dominates(self, fits):
        assert fits["abs"].beta > fits["signed"].beta + 0.2
        assert fits["abs"].alpha == pytest.approx(fits["signed"].alpha, abs=0.15)
