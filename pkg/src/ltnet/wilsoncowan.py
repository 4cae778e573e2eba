"""Two-population (excitatory / inhibitory) mean-field reduction.

A network of ``n`` nodes, a fraction ``alpha`` of them excitatory, whose
weights, inputs and caps depend only on the pre/post types collapses to
the 2-node linear-threshold network

    W_EI = [[alpha n w_ee, (1 - alpha) n w_ei],
            [alpha n w_ie, (1 - alpha) n w_ii]].

For this family every stability class has a closed form, which makes it a
convenient exactly-solvable test bed for the numeric class tests.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .linalg import DEFAULT_TOL, Verdict, excitatory_part, spectral_radius
from .matclass import is_absolutely_schur, is_p_matrix, is_totally_hurwitz
from .model import NetworkSpec


@dataclass(frozen=True)
class WilsonCowanParams:
    """Population size, excitatory fraction and per-type weights.

    ``alpha * n`` and ``(1 - alpha) * n`` are used as real numbers, so ``n``
    need not make them integral.
    """

    n: float
    alpha: float
    w_ee: float
    w_ei: float
    w_ie: float
    w_ii: float
    d_e: float = 0.0
    d_i: float = 0.0
    m_e: float = np.inf
    m_i: float = np.inf
    tau: float = 1.0

    def __post_init__(self):
        if not self.n > 0:
            raise ValueError(f"n must be positive, got {self.n}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        for name, ok in [("w_ee", self.w_ee > 0), ("w_ie", self.w_ie > 0),
                         ("w_ei", self.w_ei < 0), ("w_ii", self.w_ii < 0)]:
            if not ok:
                sign = "positive" if name in ("w_ee", "w_ie") else "negative"
                raise ValueError(f"{name} must be {sign}, got {getattr(self, name)}")
        if not (self.m_e > 0 and self.m_i > 0):
            raise ValueError("caps m_e, m_i must be positive (or inf)")

    @classmethod
    def from_effective(cls, a_ee, a_ei, a_ie, a_ii, n=1.0, alpha=0.5, **kw) -> "WilsonCowanParams":
        """Build parameters whose reduced matrix is ``[[a_ee, a_ei], [a_ie, a_ii]]``."""
        ne, ni = alpha * n, (1 - alpha) * n
        return cls(n, alpha, a_ee / ne, a_ei / ni, a_ie / ne, a_ii / ni, **kw)

    @property
    def weight_matrix(self) -> np.ndarray:
        ne, ni = self.alpha * self.n, (1 - self.alpha) * self.n
        return np.array([[ne * self.w_ee, ni * self.w_ei],
                         [ne * self.w_ie, ni * self.w_ii]])


def reduce(params: WilsonCowanParams) -> NetworkSpec:
    """The reduced 2-node network (labels ``E``, ``I``)."""
    return NetworkSpec(params.weight_matrix, [params.m_e, params.m_i], params.tau, ("E", "I"))


def inputs(params: WilsonCowanParams) -> np.ndarray:
    return np.array([params.d_e, params.d_i])


@dataclass(frozen=True)
class Condition:
    """One closed-form inequality ``margin > 0`` and its numeric counterpart."""

    name: str
    margin: float
    numeric: Verdict

    def analytic(self, tol=DEFAULT_TOL) -> Verdict:
        return Verdict.less_than(-self.margin, 0.0, tol)

    def agrees(self, tol=DEFAULT_TOL) -> bool:
        return self.analytic(tol) is self.numeric


@dataclass(frozen=True)
class WilsonCowanReport:
    params: WilsonCowanParams
    conditions: tuple[Condition, ...]

    def __getitem__(self, name) -> Condition:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def min_abs_margin(self) -> float:
        return min(abs(c.margin) for c in self.conditions)

    def consistent(self, tol=DEFAULT_TOL) -> bool:
        return all(c.agrees(tol) for c in self.conditions)

    def text(self) -> str:
        W = self.params.weight_matrix
        lines = [f"W_EI = [[{W[0, 0]:.6g}, {W[0, 1]:.6g}], [{W[1, 0]:.6g}, {W[1, 1]:.6g}]]"]
        for c in self.conditions:
            lines.append(f"{c.name:28s} analytic={c.analytic().value:8s} numeric={c.numeric.value:8s}"
                         f" margin={c.margin:+.6g}")
        return "\n".join(lines)


def analytic_conditions(params: WilsonCowanParams, tol=DEFAULT_TOL) -> WilsonCowanReport:
    """Closed-form class conditions with numeric cross-checks.

    With ``a = alpha n w_ee``, ``b = (1-alpha) n |w_ii|`` and
    ``c = alpha (1-alpha) n^2 w_ie |w_ei|``:

    * P, total Hurwitz and ``rho([W]_0^inf) < 1`` all reduce to ``a < 1``;
    * ``rho(|W|) < 1`` iff ``a < 1``, ``b < 1`` and ``c < (1-a)(1-b)``;
    * ``-I + W`` is Hurwitz iff ``(1-a) + (1+b) > 0`` and ``(1-a)(1+b) > -c``
      (here ``w_ii`` and ``w_ei`` keep their signs).

    Each margin is positive exactly when its condition holds. For the
    conjunctions the margin is the smallest of the component margins.
    """
    p = params
    W = p.weight_matrix
    a = W[0, 0]
    b = -W[1, 1]
    c = -W[0, 1] * W[1, 0]  # alpha (1-alpha) n^2 w_ie |w_ei|
    eye = np.eye(2)
    rho_exc = spectral_radius(excitatory_part(W))
    ev = np.linalg.eigvals(-eye + W)
    conds = (
        Condition("P: I-W in P", 1 - a, is_p_matrix(eye - W, tol).verdict),
        Condition("H: -I+W in H", 1 - a, is_totally_hurwitz(-eye + W, tol).verdict),
        Condition("rho([W]_0^inf) < 1", 1 - a, Verdict.less_than(rho_exc, 1.0, tol)),
        Condition("rho(|W|) < 1", min(1 - a, 1 - b, (1 - a) * (1 - b) - c),
                  is_absolutely_schur(W, tol).verdict),
        Condition("-I+W Hurwitz", min((1 - a) + (1 + b), (1 - a) * (1 + b) + c),
                  Verdict.less_than(float(ev.real.max()), 0.0, tol)),
    )
    return WilsonCowanReport(p, conds)


def random_params(rng: np.random.Generator, n_range=(2.0, 200.0), scale=2.0) -> WilsonCowanParams:
    """Random parameters with effective weights of order ``scale``."""
    n = float(rng.uniform(*n_range))
    alpha = float(rng.uniform(0.05, 0.95))
    eff = rng.uniform(0.0, scale, 4) + 1e-12
    return WilsonCowanParams.from_effective(eff[0], -eff[1], eff[2], -eff[3], n=n, alpha=alpha)
