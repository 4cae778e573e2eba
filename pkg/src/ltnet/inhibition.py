"""Selective inhibition of a node subset by top-down control.

The nodes are split into an irrelevant set (to be driven to zero) and a
relevant set. The external input is ``d = B u + dtilde`` where ``B`` acts
on the irrelevant nodes only (``B = [B-; 0]``) and ``dtilde`` vanishes on
them. All matrices here stay in the original node order; the partition
only records which rows and columns belong to which block.
"""

from __future__ import annotations

import io
import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import Trajectory, default_step, fit_decay_rate, monotone_bound, rk4, _grid
from .equilibria import STABLE, enumerate_equilibria
from .errors import RangeConditionError, ShapeError
from .linalg import (DEFAULT_TOL, Verdict, as_matrix, as_index_set, least_squares_solve,
                     operator_norm, rank)
from .matclass import (ClassCertificate, ClassResult, certify, is_absolutely_schur,
                       is_norm_contractive, is_p_matrix, is_totally_hurwitz,
                       is_totally_l_stable, lyapunov_modes, verify_lyapunov)
from .model import NetworkSpec, as_vector, threshold

RANGE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class BilayerPartition:
    """Irrelevant / relevant split of a network with its control channel.

    Parameters
    ----------
    net : NetworkSpec
    irrelevant : sequence of int
        Nodes to inhibit (size r). The rest are relevant.
    B_minus : (r, p) array
        Input matrix on the irrelevant nodes.
    d_relevant : (n - r,) array, optional
        Constant drive of the relevant nodes (zeros by default).
    """

    net: NetworkSpec
    irrelevant: tuple[int, ...]
    B_minus: np.ndarray
    d_relevant: Optional[np.ndarray] = None

    def __post_init__(self):
        n = self.net.n
        irr = as_index_set(self.irrelevant, n)
        if not irr:
            raise ShapeError("the irrelevant set must be nonempty")
        Bm = as_matrix(self.B_minus, name="B_minus")
        if Bm.shape[0] != len(irr):
            raise ShapeError(f"B_minus must have {len(irr)} rows, got {Bm.shape[0]}")
        dr = np.zeros(n - len(irr)) if self.d_relevant is None else as_vector(
            self.d_relevant, n - len(irr), "d_relevant")
        object.__setattr__(self, "irrelevant", irr)
        object.__setattr__(self, "B_minus", Bm)
        object.__setattr__(self, "d_relevant", np.array(dr, dtype=float))

    @property
    def relevant(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.net.n) if i not in self.irrelevant)

    @property
    def r(self) -> int:
        return len(self.irrelevant)

    @property
    def p(self) -> int:
        return self.B_minus.shape[1]

    @property
    def B(self) -> np.ndarray:
        """Full (n, p) input matrix, zero on relevant rows."""
        B = np.zeros((self.net.n, self.p))
        B[list(self.irrelevant)] = self.B_minus
        return B

    @property
    def dtilde(self) -> np.ndarray:
        d = np.zeros(self.net.n)
        d[list(self.relevant)] = self.d_relevant
        return d

    @property
    def W_minus(self) -> np.ndarray:
        """Rows of W on the irrelevant nodes, ``[W-- W-+]``."""
        return self.net.W[list(self.irrelevant)]

    @property
    def W_plus_row(self) -> np.ndarray:
        """Rows of W on the relevant nodes, ``[W+- W++]``."""
        return self.net.W[list(self.relevant)]

    @property
    def W_pp(self) -> np.ndarray:
        rel = list(self.relevant)
        return self.net.W[np.ix_(rel, rel)]

    def subnetwork(self) -> NetworkSpec:
        """The isolated relevant subnetwork ``tau x+' = -x+ + [W++ x+ + d+]``."""
        rel = list(self.relevant)
        labels = None if self.net.labels is None else tuple(self.net.labels[i] for i in rel)
        return NetworkSpec(self.W_pp, self.net.m[rel], self.net.tau, labels)

    def require_inhibitory(self):
        if np.any(self.B_minus > 0):
            raise ValueError("B_minus must be elementwise nonpositive to deliver inhibition")


@dataclass(frozen=True)
class RangeCheck:
    holds: bool
    residual: float
    rank_B: int
    rank_W: int
    p: int
    r: int

    @property
    def generic_expectation(self) -> bool:
        """For generic (full-rank) data the condition holds iff p >= r."""
        return self.p >= self.r


def check_range_condition(part: BilayerPartition, tol=RANGE_TOL) -> RangeCheck:
    """Is ``range([W-- W-+])`` contained in ``range(B-)``?

    Decided by the least-squares residual of ``B- X = [W-- W-+]``.
    """
    _, res = least_squares_solve(part.B_minus, part.W_minus)
    return RangeCheck(res <= tol, res, rank(part.B_minus), rank(part.W_minus), part.p, part.r)


@dataclass(frozen=True, eq=False)
class InhibitionDesign:
    """A feedforward threshold input or a feedback gain.

    ``u_bar`` (feedforward) is a sufficient constant input: any ``u >= u_bar``
    inhibits. ``K`` (feedback) solves ``B- K = -[W-- W-+]`` with minimum
    norm; ``rectified`` selects ``u = [K x]_0^inf``.
    """

    mode: str
    partition: BilayerPartition
    residual: float
    u_bar: Optional[np.ndarray] = None
    K: Optional[np.ndarray] = None
    rectified: bool = False
    nu: Optional[np.ndarray] = None
    certificate: Optional[ClassCertificate] = None

    @property
    def closed_loop_W(self) -> np.ndarray:
        if self.K is None:
            raise ValueError("feedforward designs have no closed-loop weight matrix")
        return self.partition.net.W + self.partition.B @ self.K

    def with_rectification(self, rectified=True) -> "InhibitionDesign":
        if self.mode != "feedback":
            raise ValueError("rectification applies to feedback designs")
        self.partition.require_inhibitory()
        return InhibitionDesign(self.mode, self.partition, self.residual, None, self.K,
                                rectified, None, self.certificate)


def _range_error(check: RangeCheck):
    return RangeConditionError(
        "range condition fails: range([W-- W-+]) is not contained in range(B-) "
        f"(least-squares residual {check.residual:.3g}, rank(B-)={check.rank_B}, p={check.p}, r={check.r})")


def design_feedforward(part: BilayerPartition, dbar=None, tol=RANGE_TOL) -> InhibitionDesign:
    """Constant input ``u_bar`` that silences the irrelevant nodes.

    With ``nu`` an upper bound on every trajectory started in ``[0, nu]``
    under inputs at most ``dbar`` (default ``dtilde``), ``u_s`` solves
    ``B- u_s = -[[W-- W-+]]_0^inf nu`` and ``u_bar = [u_s]_0^inf``.
    """
    part.require_inhibitory()
    check = check_range_condition(part, tol)
    if not check.holds:
        raise _range_error(check)
    dbar = part.dtilde if dbar is None else as_vector(dbar, part.net.n, "dbar")
    nu = monotone_bound(part.net, dbar)
    if nu is None:
        raise ValueError("no monotone bound: rho([W]_0^inf) >= 1 and some cap is infinite")
    rhs = -np.maximum(part.W_minus, 0.0) @ nu
    u_s, res = least_squares_solve(part.B_minus, rhs)
    return InhibitionDesign("feedforward", part, res, u_bar=np.maximum(u_s, 0.0), nu=nu)


def design_feedback_gain(part: BilayerPartition, tol=RANGE_TOL, certify_closed_loop=True) -> InhibitionDesign:
    """Minimum-norm ``K`` with ``B- K = -[W-- W-+]``.

    The closed-loop matrix ``W + B K`` then has zero rows on the irrelevant
    nodes. Raises RangeConditionError when the range condition fails.
    """
    check = check_range_condition(part, tol)
    if not check.holds:
        raise _range_error(check)
    K, res = least_squares_solve(part.B_minus, -part.W_minus)
    W_cl = part.net.W + part.B @ K
    cert = certify(W_cl) if certify_closed_loop else None
    return InhibitionDesign("feedback", part, res, K=K, certificate=cert)


def rectified_feedback_input(design: InhibitionDesign, x) -> np.ndarray:
    """``[K x]_0^inf`` (works on batches of states)."""
    if design.K is None:
        raise ValueError("rectified input needs a feedback design")
    x = np.asarray(x, dtype=float)
    return np.maximum(x @ design.K.T, 0.0)


# -- equivalences ------------------------------------------------------------

@dataclass(frozen=True)
class EquivalenceRow:
    name: str
    closed_loop: Verdict
    subnetwork: Verdict

    @property
    def agrees(self) -> bool:
        return self.closed_loop is self.subnetwork


@dataclass(frozen=True, eq=False)
class EquivalenceReport:
    rows: tuple[EquivalenceRow, ...]
    residual: float
    block_residual: float

    @property
    def consistent(self) -> bool:
        return all(r.agrees for r in self.rows)

    def discrepancies(self) -> list[EquivalenceRow]:
        return [r for r in self.rows if not r.agrees]


def lift_lyapunov(part: BilayerPartition, W_cl, P_sub, margin=1e-6) -> Optional[np.ndarray]:
    """Common Lyapunov matrix for the closed loop from one of ``W++``.

    The closed-loop modes are block lower-triangular with ``-I`` on the
    irrelevant block, so ``P = diag(c I, P++)`` works once ``c`` dominates
    the coupling through ``W+-``. Returns None if no such ``P`` verifies.
    """
    irr, rel = list(part.irrelevant), list(part.relevant)
    C_full = W_cl[np.ix_(rel, irr)]
    W_pp = W_cl[np.ix_(rel, rel)]
    k = len(rel)
    c = 0.0
    for s in itertools.product((0.0, 1.0), repeat=k):
        S = np.array(s)
        A22 = -np.eye(k) + S[:, None] * W_pp
        Q = A22.T @ P_sub + P_sub @ A22
        if np.linalg.eigvalsh(Q).max() >= 0:
            return None
        PC = P_sub @ (S[:, None] * C_full)
        c = max(c, float(np.linalg.eigvalsh(PC.T @ np.linalg.solve(-Q, PC)).max()))
    c = max(1.0, c) * 2.0  # strictly above half the bound, plus slack
    n = part.net.n
    P = np.zeros((n, n))
    P[np.ix_(irr, irr)] = c * np.eye(len(irr))
    P[np.ix_(rel, rel)] = P_sub
    P /= np.trace(P)
    return P if verify_lyapunov(W_cl, P, margin * 1e-3) else None


def _l_verdicts(part, W_cl):
    """L verdicts for the closed loop and for ``W++``.

    Both sides are searched independently; a certificate found on one side
    is then transferred (restriction or lifting) and re-verified, so a
    budget-limited miss on one side does not produce a spurious mismatch.
    """
    rel = list(part.relevant)
    sub = is_totally_l_stable(part.W_pp)
    cl = is_totally_l_stable(W_cl)
    v_sub, v_cl = sub.verdict, cl.verdict
    if v_cl is Verdict.TRUE and v_sub is not Verdict.TRUE:
        P = cl.witness[np.ix_(rel, rel)]
        if verify_lyapunov(part.W_pp, P / np.trace(P), 1e-9):
            v_sub = Verdict.TRUE
    if v_sub is Verdict.TRUE and v_cl is not Verdict.TRUE:
        if lift_lyapunov(part, W_cl, sub.witness) is not None:
            v_cl = Verdict.TRUE
    return v_cl, v_sub


def verify_equivalences(part: BilayerPartition, design: InhibitionDesign, tol=DEFAULT_TOL) -> EquivalenceReport:
    """Compare the five class verdicts of ``W + B K`` and the relevant block."""
    if design.K is None:
        raise ValueError("verify_equivalences needs a feedback design")
    W_cl = design.closed_loop_W
    n, k = part.net.n, len(part.relevant)
    W_pp = part.W_pp
    block_res = float(np.max(np.abs(W_cl[list(part.irrelevant)]), initial=0.0))
    v_cl_L, v_sub_L = _l_verdicts(part, W_cl)
    rows = (
        EquivalenceRow("P: I-(W+BK) vs I-W++",
                       is_p_matrix(np.eye(n) - W_cl, tol).verdict,
                       is_p_matrix(np.eye(k) - W_pp, tol).verdict),
        EquivalenceRow("H: -I+(W+BK) vs -I+W++",
                       is_totally_hurwitz(-np.eye(n) + W_cl, tol).verdict,
                       is_totally_hurwitz(-np.eye(k) + W_pp, tol).verdict),
        EquivalenceRow("L: W+BK vs W++", v_cl_L, v_sub_L),
        EquivalenceRow("rho(|W+BK|)<1 vs rho(|W++|)<1",
                       is_absolutely_schur(W_cl, tol).verdict,
                       is_absolutely_schur(W_pp, tol).verdict),
        EquivalenceRow("||W+BK||<1 vs ||[W+- W++]||<1",
                       is_norm_contractive(W_cl, tol).verdict,
                       Verdict.less_than(operator_norm(part.W_plus_row), 1.0, tol)),
    )
    return EquivalenceReport(rows, design.residual, block_res)


# -- closed-loop simulation -------------------------------------------------

@dataclass(frozen=True, eq=False)
class ClosedLoopResult:
    """Closed-loop trajectory with inhibition metrics.

    ``decay_excess`` is the largest ``||x-(t)|| - ||x-(0)|| e^{-t/tau}``
    (nonpositive up to integration error when inhibition is exact or
    stronger); ``x_plus_isolated`` is the unique stable equilibrium of
    the isolated relevant subnetwork, when there is one.
    """

    trajectory: Trajectory
    x_minus_final: float
    decay_rate: Optional[float]
    decay_excess: float
    x_plus_final: np.ndarray
    x_plus_isolated: Optional[np.ndarray]

    @property
    def x_plus_error(self) -> Optional[float]:
        if self.x_plus_isolated is None:
            return None
        return float(np.max(np.abs(self.x_plus_final - self.x_plus_isolated)))


def isolated_equilibrium(part: BilayerPartition) -> Optional[np.ndarray]:
    eqs = enumerate_equilibria(part.subnetwork(), part.d_relevant)
    if len(eqs) == 1 and eqs[0].stability == STABLE:
        return eqs[0].state
    return None


def closed_loop_simulate(part: BilayerPartition, design: InhibitionDesign, x0, horizon,
                         u=None, h=None) -> ClosedLoopResult:
    """Simulate with ``d = B u + dtilde``.

    Feedforward designs use the constant ``u`` (default ``u_bar``); feedback
    designs use ``u = K x`` or its rectification.
    """
    net = part.net
    x0 = as_vector(x0, net.n, "x0")
    if design.partition is not part:
        raise ValueError("design was built for a different partition")
    B, dt = part.B, part.dtilde
    W, m, tau = net.W, net.m, net.tau
    if design.mode == "feedforward":
        u = design.u_bar if u is None else as_vector(u, part.p, "u")
        if np.any(u < design.u_bar - 1e-12):
            raise ValueError("feedforward input must dominate u_bar componentwise")
        d_const = B @ u + dt
        field = lambda t, x: (-x + threshold(x @ W.T + d_const, m)) / tau
        Wstep = W
    elif design.rectified:
        K = design.K
        field = lambda t, x: (-x + threshold(x @ W.T + np.maximum(x @ K.T, 0.0) @ B.T + dt, m)) / tau
        Wstep = np.hstack([W, B @ K])
    else:
        Wc = design.closed_loop_W
        field = lambda t, x: (-x + threshold(x @ Wc.T + dt, m)) / tau
        Wstep = Wc
    if h is None:
        h = min(tau / 20, 0.2 * tau / (1.0 + operator_norm(Wstep)))
    steps, h = _grid(horizon, h, tau)
    X = rk4(field, x0, 0.0, h, steps, 0.0, m)
    t = h * np.arange(steps + 1)
    traj = Trajectory(t, X, "constant" if design.mode == "feedforward" else "feedback", None)
    irr, rel = list(part.irrelevant), list(part.relevant)
    xm = np.linalg.norm(X[:, irr], axis=1)
    excess = float(np.max(xm - xm[0] * np.exp(-t / tau)))
    rate = fit_decay_rate(t, xm)
    return ClosedLoopResult(traj, float(xm[-1]), rate, excess, X[-1, rel], isolated_equilibrium(part))


def design_report(design: InhibitionDesign, equivalences: Optional[EquivalenceReport] = None,
                  result: Optional[ClosedLoopResult] = None) -> str:
    """Plain-text summary of a design, for export."""
    part = design.partition
    out = io.StringIO()
    out.write("# ltnet inhibition report v1\n")
    out.write(f"mode: {design.mode}{' (rectified)' if design.rectified else ''}\n")
    out.write(f"irrelevant nodes: {list(part.irrelevant)}\nrelevant nodes: {list(part.relevant)}\n")
    out.write(f"r={part.r} p={part.p} residual={design.residual:.3e}\n")
    fmt = lambda a: np.array2string(np.asarray(a), precision=6, suppress_small=True, max_line_width=120)
    if design.u_bar is not None:
        out.write(f"u_bar: {fmt(design.u_bar)}\nnu: {fmt(design.nu)}\n")
    if design.K is not None:
        out.write(f"K:\n{fmt(design.K)}\n")
    if design.certificate is not None:
        out.write("closed-loop classes (W + B K):\n" + design.certificate.report() + "\n")
    if equivalences is not None:
        out.write("equivalences (closed loop | relevant block):\n")
        for r in equivalences.rows:
            out.write(f"  {r.name:34s} {r.closed_loop.value:8s} {r.subnetwork.value:8s}"
                      f" {'ok' if r.agrees else 'MISMATCH'}\n")
    if result is not None:
        out.write(f"||x-(T)|| = {result.x_minus_final:.3e}\n")
        out.write(f"x- decay excess over e^(-t/tau) = {result.decay_excess:.3e}\n")
        if result.decay_rate is not None:
            out.write(f"fitted x- decay rate = {result.decay_rate:.4f}\n")
        if result.x_plus_error is not None:
            out.write(f"|x+(T) - isolated equilibrium| = {result.x_plus_error:.3e}\n")
    return out.getvalue()
