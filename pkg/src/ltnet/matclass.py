"""Matrix-class certificates for weight matrices.

Five classes are tested:

* ``I - W`` is a P-matrix (all principal minors positive),
* ``-I + W`` is totally Hurwitz (every principal submatrix Hurwitz),
* ``W`` is totally L-stable (one Lyapunov matrix for all 2^n activations),
* ``W`` is absolutely Schur stable (``rho(|W|) < 1``),
* ``||W|| < 1``.

The exhaustive sweeps visit index sets by size and then lexicographically,
so the reported witness of a failure is always the first violating set in
that order.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import LimitExceeded
from .linalg import (DEFAULT_TOL, Verdict, as_matrix, excitatory_part,
                     operator_norm, spectral_radius, stacked_principal_submatrices)

log = logging.getLogger(__name__)

EXHAUSTIVE_LIMIT = 20
LMI_LIMIT = 12
LMI_EPS = 1e-6
LMI_DELTA = 1e-6
LMI_BUDGET = 5000

_CHUNK = 4096


@dataclass(frozen=True, eq=False)
class ClassResult:
    """Verdict for one class with its decisive margin and optional witness.

    ``margin`` is signed so that positive values mean "inside the class".
    ``witness`` is an index set for failed P / H tests and the Lyapunov
    matrix for a successful L test.
    """

    verdict: Verdict
    margin: float
    witness: object = None
    budget_limited: bool = False

    def __bool__(self):
        return bool(self.verdict)


@dataclass(frozen=True, eq=False)
class ClassCertificate:
    W: np.ndarray
    p_matrix: ClassResult
    totally_hurwitz: ClassResult
    totally_l_stable: Optional[ClassResult]
    absolutely_schur: ClassResult
    norm: ClassResult

    def verdicts(self) -> dict[str, Optional[Verdict]]:
        return {
            "P(I-W)": self.p_matrix.verdict,
            "H(-I+W)": self.totally_hurwitz.verdict,
            "L(W)": None if self.totally_l_stable is None else self.totally_l_stable.verdict,
            "rho(|W|)<1": self.absolutely_schur.verdict,
            "||W||<1": self.norm.verdict,
        }

    def report(self) -> str:
        lines = []
        for name, res in [("P-matrix  I-W", self.p_matrix),
                          ("tot. Hurwitz -I+W", self.totally_hurwitz),
                          ("tot. L-stable W", self.totally_l_stable),
                          ("abs. Schur rho(|W|)<1", self.absolutely_schur),
                          ("norm ||W||<1", self.norm)]:
            if res is None:
                lines.append(f"{name:24s} skipped (over LMI limit {LMI_LIMIT})")
                continue
            extra = ""
            if isinstance(res.witness, tuple):
                extra = f"  witness={list(res.witness)}"
            if res.budget_limited:
                extra += "  (budget-limited)"
            lines.append(f"{name:24s} {res.verdict.value:8s} margin={res.margin:+.6g}{extra}")
        return "\n".join(lines)


def _check_limit(n, limit, what):
    if n > limit:
        raise LimitExceeded(what, n, limit)


def _principal_sweep(A, decisive, tol):
    """Scan principal submatrices; ``decisive`` maps a stack to values that
    must exceed ``tol``. Returns (verdict, first witness, its value, min value)."""
    n = A.shape[0]
    first_marginal = None
    worst = np.inf
    for k in range(1, n + 1):
        combos = itertools.combinations(range(n), k)
        while True:
            chunk = list(itertools.islice(combos, _CHUNK))
            if not chunk:
                break
            vals = decisive(stacked_principal_submatrices(A, chunk))
            worst = min(worst, float(vals.min()))
            bad = np.flatnonzero(vals < -tol)
            if bad.size:
                i = bad[0]
                return Verdict.FALSE, chunk[i], float(vals[i]), worst
            if first_marginal is None:
                marg = np.flatnonzero(vals <= tol)
                if marg.size:
                    first_marginal = (chunk[marg[0]], float(vals[marg[0]]))
    if first_marginal is not None:
        return Verdict.MARGINAL, first_marginal[0], first_marginal[1], worst
    return Verdict.TRUE, None, worst, worst


def is_p_matrix(A, tol=DEFAULT_TOL, limit=EXHAUSTIVE_LIMIT) -> ClassResult:
    """All principal minors positive. Witness of failure: the index set."""
    A = as_matrix(A, square=True)
    _check_limit(A.shape[0], limit, "P-matrix test")
    verdict, idx, value, worst = _principal_sweep(A, np.linalg.det, tol)
    margin = value if verdict is not Verdict.TRUE else worst
    return ClassResult(verdict, margin, idx)


def _neg_max_real(stack):
    if stack.shape[1] == 1:
        return -stack[:, 0, 0]
    return -np.max(np.linalg.eigvals(stack).real, axis=1)


def is_totally_hurwitz(A, tol=DEFAULT_TOL, limit=EXHAUSTIVE_LIMIT) -> ClassResult:
    """Every principal submatrix Hurwitz. Margin is minus the largest real part."""
    A = as_matrix(A, square=True)
    _check_limit(A.shape[0], limit, "totally-Hurwitz test")
    verdict, idx, value, worst = _principal_sweep(A, _neg_max_real, tol)
    margin = value if verdict is not Verdict.TRUE else worst
    return ClassResult(verdict, margin, idx)


def is_absolutely_schur(W, tol=DEFAULT_TOL) -> ClassResult:
    rho = spectral_radius(np.abs(as_matrix(W, square=True)))
    return ClassResult(Verdict.less_than(rho, 1.0, tol), 1.0 - rho)


def is_norm_contractive(W, tol=DEFAULT_TOL) -> ClassResult:
    nrm = operator_norm(as_matrix(W))
    return ClassResult(Verdict.less_than(nrm, 1.0, tol), 1.0 - nrm)


def is_excitatory_stable(W, tol=DEFAULT_TOL) -> ClassResult:
    """``rho([W]_0^inf) < 1``, the boundedness condition for unbounded networks."""
    rho = spectral_radius(excitatory_part(as_matrix(W, square=True)))
    return ClassResult(Verdict.less_than(rho, 1.0, tol), 1.0 - rho)


# -- total L-stability ------------------------------------------------------

def lyapunov_modes(W) -> np.ndarray:
    """Distinct matrices ``-I + diag(s) W`` over ``s`` in {0,1}^n.

    Nodes whose row of ``W`` is zero do not change the mode, so only the
    remaining nodes are enumerated.
    """
    W = np.asarray(W, dtype=float)
    n = W.shape[0]
    live = [i for i in range(n) if np.any(W[i] != 0)]
    k = len(live)
    masks = np.zeros((2 ** k, n))
    for j, bits in enumerate(itertools.product((0.0, 1.0), repeat=k)):
        masks[j, live] = bits
    return -np.eye(n)[None] + masks[:, :, None] * W[None]


def _lyapunov_values(P, modes):
    """Top eigenvalue and eigenvector of ``A^T P + P A`` for every mode."""
    M = np.einsum("kji,jl->kil", modes, P)
    M = M + np.swapaxes(M, 1, 2)
    w, V = np.linalg.eigh(M)
    return w[:, -1], V[:, :, -1]


def _project_spectraplex(P, delta):
    """Euclidean projection onto {P = P^T, P >= delta I, tr P = 1}."""
    w, U = np.linalg.eigh((P + P.T) / 2)
    n = w.size
    # eigenvalues: shift by delta, then project onto the simplex of mass 1 - n delta
    y = w - delta
    mass = 1.0 - n * delta
    s = np.sort(y)[::-1]
    css = np.cumsum(s) - mass
    rho = np.flatnonzero(s - css / np.arange(1, n + 1) > 0)[-1]
    x = np.maximum(y - css[rho] / (rho + 1), 0.0) + delta
    return (U * x) @ U.T


def verify_lyapunov(W, P, margin=LMI_EPS / 2) -> bool:
    """Independent re-check of an L witness: P > 0 and every mode
    inequality holds with at least ``margin`` to spare (scaled by tr P)."""
    W = as_matrix(W, square=True)
    P = as_matrix(P, square=True)
    if not np.allclose(P, P.T, atol=1e-12):
        return False
    scale = np.trace(P)
    if np.linalg.eigvalsh(P).min() <= 0:
        return False
    n = W.shape[0]
    for s in itertools.product((0.0, 1.0), repeat=n):
        A = -np.eye(n) + np.diag(s) @ W
        if np.linalg.eigvalsh(A.T @ P + P @ A).max() > -margin * scale:
            return False
    return True


def is_totally_l_stable(W, eps=LMI_EPS, delta=LMI_DELTA, budget=LMI_BUDGET,
                        tol=DEFAULT_TOL, limit=LMI_LIMIT) -> ClassResult:
    """Search for a common Lyapunov matrix over all activation patterns.

    Minimises ``g(P) = max_s lambda_max((-I + S W)^T P + P (-I + S W))``
    over unit-trace ``P >= delta I`` by projected subgradient descent with
    step ``1/(n sqrt(k))``. Success when ``g < -eps``.

    A failing totally-Hurwitz test is a certified "false" (L implies H).
    Otherwise exhausting the budget yields "false" flagged budget-limited:
    the search is not a proof of infeasibility.
    """
    W = as_matrix(W, square=True)
    n = W.shape[0]
    _check_limit(n, limit, "totally-L-stable test")
    if n == 0:
        return ClassResult(Verdict.TRUE, np.inf, np.zeros((0, 0)))
    h = is_totally_hurwitz(-np.eye(n) + W, tol=tol)
    if h.verdict is Verdict.FALSE:
        return ClassResult(Verdict.FALSE, h.margin)

    modes = lyapunov_modes(W)
    P = np.eye(n) / n
    best, best_P = np.inf, P
    step0 = 1.0 / n
    for k in range(1, budget + 1):
        lam, V = _lyapunov_values(P, modes)
        i = int(np.argmax(lam))
        if lam[i] < best:
            best, best_P = float(lam[i]), P
            if best < -eps:
                return ClassResult(Verdict.TRUE, -best, best_P)
        v = V[i]
        G = np.outer(modes[i] @ v, v)
        G = G + G.T
        G -= np.trace(G) / n * np.eye(n)
        gn = np.linalg.norm(G)
        if gn == 0.0:
            break
        P = _project_spectraplex(P - step0 / np.sqrt(k) * G / gn, delta)
    log.debug("L search budget exhausted: best g = %.3g", best)
    return ClassResult(Verdict.FALSE, -best, None, budget_limited=True)


def certify(W, tol=DEFAULT_TOL, limit=EXHAUSTIVE_LIMIT, lmi_limit=LMI_LIMIT,
            budget=LMI_BUDGET) -> ClassCertificate:
    W = as_matrix(W, name="W", square=True)
    n = W.shape[0]
    _check_limit(n, limit, "certify")
    eye = np.eye(n)
    p = is_p_matrix(eye - W, tol=tol, limit=limit)
    h = is_totally_hurwitz(-eye + W, tol=tol, limit=limit)
    l = is_totally_l_stable(W, tol=tol, budget=budget, limit=lmi_limit) if n <= lmi_limit else None
    return ClassCertificate(W, p, h, l, is_absolutely_schur(W, tol), is_norm_contractive(W, tol))


@dataclass(frozen=True)
class Implication:
    name: str
    antecedent: Verdict
    consequent: Verdict

    @property
    def violated(self) -> bool:
        return self.antecedent is Verdict.TRUE and self.consequent is Verdict.FALSE

    @property
    def converse_fails(self) -> bool:
        return self.consequent is Verdict.TRUE and self.antecedent is Verdict.FALSE


@dataclass(frozen=True)
class HierarchyReport:
    implications: tuple[Implication, ...]

    @property
    def violations(self) -> list[Implication]:
        return [imp for imp in self.implications if imp.violated]

    @property
    def consistent(self) -> bool:
        return not self.violations


def hierarchy_consistency(W, certificate: Optional[ClassCertificate] = None, **kw) -> HierarchyReport:
    """Check the four inclusions among the classes on one matrix.

    Any violation means a bug in this package, and is logged as an error.
    """
    cert = certificate or certify(W, **kw)
    l = cert.totally_l_stable.verdict if cert.totally_l_stable else Verdict.MARGINAL
    imps = (
        Implication("rho(|W|)<1 => -I+W in H", cert.absolutely_schur.verdict, cert.totally_hurwitz.verdict),
        Implication("||W||<1 => W in L", cert.norm.verdict, l),
        Implication("W in L => -I+W in H", l, cert.totally_hurwitz.verdict),
        Implication("-I+W in H => I-W in P", cert.totally_hurwitz.verdict, cert.p_matrix.verdict),
    )
    report = HierarchyReport(imps)
    for imp in report.violations:
        log.error("class hierarchy violated (%s) on W=%s", imp.name, np.array2string(cert.W))
    return report
