"""Monte Carlo statistics of random sign-constrained networks.

Networks have log-normal weight magnitudes, a fraction of absent
connections, and column signs fixed per presynaptic node (each node is
either excitatory or inhibitory). Each sample draws from its own
counter-based Philox stream keyed by ``(seed, stream, sample)``, so results
do not depend on evaluation order.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .linalg import Verdict, spectral_radius
from .matclass import EXHAUSTIVE_LIMIT, is_p_matrix, is_totally_hurwitz
from .model import NetworkSpec

#: largest n for which the exhaustive P / H tests are run in ensembles
CLASS_TEST_LIMIT = 16


@dataclass(frozen=True)
class EnsembleConfig:
    """Sampling parameters.

    ``sparsity`` is the probability that an off-diagonal entry is zero;
    ``excitatory`` the probability that a column (a presynaptic node) is
    excitatory.
    """

    n_values: tuple[int, ...] = (2, 4, 6, 8, 10, 12, 14, 16)
    samples: int = 1000
    mu: float = -0.7
    sigma: float = 0.9
    sparsity: float = 0.2
    excitatory: float = 0.8
    mu_values: Optional[tuple[float, ...]] = None
    seed: int = 0
    zero_diagonal: bool = True

    def __post_init__(self):
        for name in ("sparsity", "excitatory"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.samples < 1:
            raise ValueError("samples must be at least 1")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if any(int(n) < 1 for n in self.n_values):
            raise ValueError("network sizes must be positive")
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        if self.mu_values is not None:
            object.__setattr__(self, "mu_values", tuple(float(m) for m in self.mu_values))


def sample_rng(seed: int, stream: int, sample: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream, sample])))


def sample_weights(config: EnsembleConfig, n: int, rng: np.random.Generator, mu=None) -> np.ndarray:
    mu = config.mu if mu is None else mu
    mag = rng.lognormal(mu, config.sigma, (n, n))
    present = rng.random((n, n)) >= config.sparsity
    signs = np.where(rng.random(n) < config.excitatory, 1.0, -1.0)
    W = mag * present * signs[None, :]
    if config.zero_diagonal:
        np.fill_diagonal(W, 0.0)
    return W


def sample_network(config: EnsembleConfig, n: int, stream=0, sample=0, mu=None) -> NetworkSpec:
    """One random network (uncapped) from the ``(config.seed, stream, sample)`` stream."""
    return NetworkSpec(sample_weights(config, n, sample_rng(config.seed, stream, sample), mu))


def _rate(k, N):
    p = k / N
    return p, math.sqrt(p * (1 - p) / N)


@dataclass(frozen=True)
class EnsembleRow:
    """Estimates for one (n, mu) configuration; ``None`` when not computed."""

    n: int
    mu: float
    samples: int
    p_matrix: Optional[float]
    p_matrix_se: Optional[float]
    hurwitz: Optional[float]
    hurwitz_se: Optional[float]
    abs_schur: float
    abs_schur_se: float
    mean_log_rho: float
    mean_log_rho_se: float


@dataclass(frozen=True)
class EnsembleReport:
    config: EnsembleConfig
    rows: tuple[EnsembleRow, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# ltnet ensemble csv v1\n")
        cols = ["n", "mu", "samples", "p_P", "se_P", "p_H", "se_H", "p_abs_schur", "se_abs_schur",
                "mean_log_rho_abs", "se_log_rho_abs"]
        buf.write(",".join(cols) + "\n")
        fmt = lambda v: "" if v is None else (str(v) if isinstance(v, int) else f"{v:.10g}")
        for r in self.rows:
            vals = [r.n, r.mu, r.samples, r.p_matrix, r.p_matrix_se, r.hurwitz, r.hurwitz_se,
                    r.abs_schur, r.abs_schur_se, r.mean_log_rho, r.mean_log_rho_se]
            buf.write(",".join(fmt(v) for v in vals) + "\n")
        return buf.getvalue()


def _evaluate(config, n, mu, stream, class_tests):
    N = config.samples
    kP = kH = kA = 0
    logs = np.empty(N)
    for s in range(N):
        W = sample_weights(config, n, sample_rng(config.seed, stream, s), mu)
        rho = spectral_radius(np.abs(W))
        kA += rho < 1.0
        logs[s] = np.log(rho) if rho > 0 else -np.inf
        if class_tests:
            eye = np.eye(n)
            kP += is_p_matrix(eye - W).verdict is Verdict.TRUE
            kH += is_totally_hurwitz(-eye + W).verdict is Verdict.TRUE
    pA, sA = _rate(kA, N)
    finite = logs[np.isfinite(logs)]
    mlog = float(finite.mean()) if finite.size else -np.inf
    slog = float(finite.std(ddof=1) / math.sqrt(finite.size)) if finite.size > 1 else float("nan")
    if class_tests:
        pP, sP = _rate(kP, N)
        pH, sH = _rate(kH, N)
    else:
        pP = sP = pH = sH = None
    return EnsembleRow(n, mu, N, pP, sP, pH, sH, pA, sA, mlog, slog)


def class_probability_curve(config: EnsembleConfig, class_tests=True) -> EnsembleReport:
    """Probability of each class versus n (and versus mu when ``mu_values`` is set).

    The exhaustive P and H tests run only for ``n <= CLASS_TEST_LIMIT``;
    larger sizes report only the ``rho(|W|)`` statistics. Configuration
    ``k`` in the (mu, n) loop uses stream ``k``.
    """
    mus = config.mu_values if config.mu_values is not None else (config.mu,)
    rows = []
    stream = 0
    for mu in mus:
        for n in config.n_values:
            rows.append(_evaluate(config, n, mu, stream, class_tests and n <= CLASS_TEST_LIMIT))
            stream += 1
    return EnsembleReport(config, tuple(rows))


@dataclass(frozen=True)
class ScalingFit:
    """``mean log rho = alpha log n + beta`` (natural logarithms)."""

    alpha: float
    beta: float
    n_values: tuple[int, ...]
    mean_log_rho: tuple[float, ...]
    statistic: str


def spectral_scaling_fit(config: EnsembleConfig, n_values: Sequence[int] = (8, 16, 32, 64, 128),
                         statistic="abs", scale=1.0) -> ScalingFit:
    """Least-squares fit of the mean log spectral radius against log n.

    ``statistic="abs"`` uses ``rho(|W|)``; ``"signed"`` uses ``rho(W)``.
    ``scale`` multiplies every sampled matrix. Size ``n_values[k]`` uses
    stream ``k``.
    """
    ns = tuple(int(n) for n in n_values)
    if len(set(ns)) < 3:
        raise ValueError("spectral_scaling_fit needs at least 3 distinct network sizes")
    if statistic not in ("abs", "signed"):
        raise ValueError(f"statistic must be 'abs' or 'signed', got {statistic!r}")
    means = []
    for k, n in enumerate(ns):
        vals = np.empty(config.samples)
        for s in range(config.samples):
            W = scale * sample_weights(config, n, sample_rng(config.seed, k, s))
            vals[s] = spectral_radius(np.abs(W) if statistic == "abs" else W)
        with np.errstate(divide="ignore"):
            logs = np.log(vals)
        logs = logs[np.isfinite(logs)]
        means.append(float(logs.mean()))
    alpha, beta = np.polyfit(np.log(ns), means, 1)
    return ScalingFit(float(alpha), float(beta), ns, tuple(means), statistic)
