"""Equilibria of linear-threshold networks by exhaustive region enumeration.

Every switching index ``sigma`` defines a candidate

    x*_sigma = (I - L W)^-1 (L d + S m)

(``L``/``S`` the diagonal indicators of linear / saturated nodes), which is
an equilibrium exactly when it lies in its own region. Candidates that sit
on region faces show up in several regions and are merged.
"""

from __future__ import annotations

import io
import itertools
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import AssumptionViolated, LimitExceeded
from .linalg import DEFAULT_TOL, Verdict
from .matclass import ClassResult, is_p_matrix
from .model import (INACTIVE, LINEAR, SATURATED, NetworkSpec, SwitchingIndex,
                    as_vector, region_count, regions)

log = logging.getLogger(__name__)

UNBOUNDED_LIMIT = 16
BOUNDED_LIMIT = 10
PAIR_LIMIT = 5
SINGULAR_TOL = 1e-12
_CHUNK = 8192

STABLE, UNSTABLE, MARGINAL, BOUNDARY = "stable", "unstable", "marginal", "boundary"


@dataclass(frozen=True, eq=False)
class Equilibrium:
    """One equilibrium candidate and its classification.

    ``stability`` comes from the eigenvalues of ``-I + L W``; candidates on
    a region face are labelled "boundary". ``shared_with`` lists the other
    regions whose candidate coincides with this one.
    """

    state: np.ndarray
    sigma: SwitchingIndex
    valid: bool
    stability: str
    max_real: float
    min_real: float
    on_boundary: bool = False
    shared_with: tuple[SwitchingIndex, ...] = ()

    @property
    def sigmas(self) -> tuple[SwitchingIndex, ...]:
        return (self.sigma,) + self.shared_with


def _enumeration_limit(net):
    return UNBOUNDED_LIMIT if net.unbounded else BOUNDED_LIMIT


def _codes_array(net):
    return np.array([s.codes for s in regions(net)], dtype=np.int8)


def _solve_modes(net, d, codes):
    """Candidates, net inputs ``u = Wx + d`` and mode matrices for a stack of regions."""
    n = net.n
    lin = (codes == LINEAR).astype(float)
    sat = codes == SATURATED
    A = np.eye(n)[None] - lin[:, :, None] * net.W[None]
    rhs = lin * d + np.where(sat, np.where(np.isfinite(net.m), net.m, 0.0), 0.0)
    smin = np.linalg.svd(A, compute_uv=False)[:, -1]
    if np.any(smin <= SINGULAR_TOL):
        bad = SwitchingIndex(tuple(codes[int(np.argmin(smin))]))
        raise AssumptionViolated(f"I - Sigma W is singular for sigma={bad}")
    x = np.linalg.solve(A, rhs[:, :, None])[:, :, 0]
    u = x @ net.W.T + d
    return x, u, A


def _membership(net, codes, u, tol):
    """(valid, on_boundary) masks for candidates with net inputs ``u``."""
    m = net.m
    scale = tol * np.maximum(1.0, np.max(np.abs(u), axis=1, keepdims=True))
    ina, lin, sat = codes == INACTIVE, codes == LINEAR, codes == SATURATED
    ok = np.where(ina, u <= scale, True)
    ok &= np.where(lin, (u >= -scale) & (u <= m + scale), True)
    ok &= np.where(sat, u >= m - scale, True)
    face = np.where(ina, u >= -scale, False)
    face |= np.where(lin, (u <= scale) | (u >= m - scale), False)
    face |= np.where(sat, u <= m + scale, False)
    return ok.all(axis=1), face.any(axis=1)


def _stability(A, on_boundary, tol):
    ev = np.linalg.eigvals(-A)  # mode matrix -I + L W = -(I - L W)
    mx, mn = float(ev.real.max()), float(ev.real.min())
    if on_boundary:
        label = BOUNDARY
    elif mx < -tol:
        label = STABLE
    elif mx > tol:
        label = UNSTABLE
    else:
        label = MARGINAL
    return label, mx, mn


def candidate(net: NetworkSpec, d, sigma: SwitchingIndex, tol=DEFAULT_TOL) -> Equilibrium:
    """Equilibrium candidate of one region, its validity and stability.

    Raises AssumptionViolated when ``I - L W`` is singular.
    """
    sigma.check(net)
    d = as_vector(d, net.n, "d")
    codes = np.array([sigma.codes], dtype=np.int8)
    x, u, A = _solve_modes(net, d, codes)
    valid, face = _membership(net, codes, u, tol)
    label, mx, mn = _stability(A[0], bool(face[0]) and bool(valid[0]), tol)
    return Equilibrium(x[0], sigma, bool(valid[0]), label, mx, mn, bool(face[0]) and bool(valid[0]))


def _group_duplicates(net, codes, x, u, tol):
    """Group indices of coinciding candidates.

    Unbounded networks use ``M_sigma d`` (which equals ``u`` with the sign
    flipped on non-linear nodes); bounded ones compare states directly.
    """
    if net.unbounded:
        keys = np.where(codes == LINEAR, u, -u)
    else:
        keys = x
    groups: list[list[int]] = []
    for i in range(len(keys)):
        for g in groups:
            ref = keys[g[0]]
            if np.max(np.abs(keys[i] - ref)) <= tol * max(1.0, float(np.max(np.abs(ref)))):
                g.append(i)
                break
        else:
            groups.append([i])
    return groups


def _valid_candidates(net, d, tol):
    limit = _enumeration_limit(net)
    if net.n > limit:
        raise LimitExceeded("equilibrium enumeration", net.n, limit)
    all_codes = _codes_array(net)
    xs, us, As, cs, faces = [], [], [], [], []
    for start in range(0, len(all_codes), _CHUNK):
        codes = all_codes[start:start + _CHUNK]
        x, u, A = _solve_modes(net, d, codes)
        valid, face = _membership(net, codes, u, tol)
        xs.append(x[valid]); us.append(u[valid]); As.append(A[valid])
        cs.append(codes[valid]); faces.append(face[valid])
    return (np.concatenate(cs), np.concatenate(xs), np.concatenate(us),
            np.concatenate(As), np.concatenate(faces))


def enumerate_equilibria(net: NetworkSpec, d, tol=DEFAULT_TOL) -> list[Equilibrium]:
    """All equilibria, one entry per distinct state, ordered by region.

    Evaluates every region (2^n for uncapped networks, up to 3^n with
    caps). Coincident face equilibria are merged into the lexicographically
    first region, with the others listed in ``shared_with``.
    """
    d = as_vector(d, net.n, "d")
    codes, x, u, A, face = _valid_candidates(net, d, tol)
    out = []
    for g in _group_duplicates(net, codes, x, u, tol):
        i = g[0]
        boundary = bool(face[i]) or len(g) > 1
        label, mx, mn = _stability(A[i], boundary, tol)
        out.append(Equilibrium(x[i], SwitchingIndex(tuple(codes[i])), True, label, mx, mn,
                               boundary, tuple(SwitchingIndex(tuple(codes[j])) for j in g[1:])))
    return out


def equilibria_csv(eqs: Sequence[Equilibrium], n: int) -> str:
    buf = io.StringIO()
    buf.write("# ltnet equilibria csv v1\n")
    buf.write(",".join(["sigma"] + [f"x{i}" for i in range(n)]
                       + ["valid", "stability", "max_real_eig", "min_real_eig"]) + "\n")
    for e in eqs:
        row = [str(e.sigma)] + [f"{v:.12g}" for v in e.state] + [
            str(e.valid).lower(), e.stability, f"{e.max_real:.12g}", f"{e.min_real:.12g}"]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


# -- M_sigma and the uniqueness conditions ---------------------------------------

def _require_unbounded(net, what):
    if not net.unbounded:
        raise ValueError(f"{what} is defined for networks with infinite caps")


def m_sigma(net: NetworkSpec, sigma: SwitchingIndex) -> np.ndarray:
    """``M_sigma = (2L - I)(I - W L)^-1``; ``x*_sigma`` is an equilibrium
    iff ``M_sigma d >= 0``."""
    _require_unbounded(net, "M_sigma")
    sigma.check(net)
    lin = sigma.linear.astype(float)
    B = np.eye(net.n) - net.W * lin[None, :]
    if np.linalg.svd(B, compute_uv=False)[-1] <= SINGULAR_TOL:
        raise AssumptionViolated(f"I - W Sigma is singular for sigma={sigma}")
    return (2 * lin - 1)[:, None] * np.linalg.inv(B)


def _all_m_sigma(net):
    n = net.n
    lins = np.array(list(itertools.product((0.0, 1.0), repeat=n)))
    B = np.eye(n)[None] - net.W[None] * lins[:, None, :]
    if np.any(np.linalg.svd(B, compute_uv=False)[:, -1] <= SINGULAR_TOL):
        raise AssumptionViolated("I - W Sigma is singular for some sigma")
    return lins, (2 * lins - 1)[:, :, None] * np.linalg.inv(B)


@dataclass(frozen=True, eq=False)
class DirectionSearch:
    """Result of the sampled search over unit inputs.

    ``best_product`` is the largest ``mu1(d) mu2(d)`` found (EUE on the
    samples iff negative) at ``best_direction``. When some direction has
    ``mu2 > 0`` two regions pass the ``M_sigma d >= 0`` test with distinct
    values, giving two distinct equilibria: ``witness_input`` is such an
    input (rescaled into the cap box for capped networks), with
    ``witness_regions`` and ``witness_equilibria``.
    """

    best_product: float
    best_direction: np.ndarray
    mu1: float
    mu2: float
    best_mu2: float
    witness_input: Optional[np.ndarray] = None
    witness_regions: tuple[SwitchingIndex, ...] = ()
    witness_equilibria: tuple[Equilibrium, ...] = ()
    samples: int = 0

    @property
    def unique_on_samples(self) -> bool:
        return self.best_product < 0

    @property
    def found_multiplicity(self) -> bool:
        return len(self.witness_equilibria) >= 2


def _mu_values(Ms, D):
    """mu1, mu2 and the two top regions for each row of D."""
    mins = np.einsum("sij,kj->ski", Ms, D).min(axis=2)  # (regions, samples)
    order = np.argsort(-mins, axis=0)
    top = np.take_along_axis(mins, order[:2], axis=0)
    return top[0], top[1], order[:2]


def direction_search(net: NetworkSpec, samples=10_000, seed=0, refine=10, tol=DEFAULT_TOL) -> DirectionSearch:
    """Sampled maximisation of ``mu1(d) mu2(d)`` over the unit sphere.

    ``mu1``/``mu2`` are the largest and second largest of
    ``min_i (M_sigma d)_i`` over regions. Uniform sphere samples are
    followed by Nelder-Mead refinement from the best 10 starts, both for
    the product and for ``mu2`` alone (which locates multiplicity). This is
    a heuristic search, not a certificate. ``d = 0`` is never sampled.

    Capped networks are searched on their uncapped relaxation; the
    equilibria along a witness ray scale linearly with the input, so the
    witness is shrunk until both equilibria sit strictly inside the caps.
    """
    n = net.n
    if n > UNBOUNDED_LIMIT:
        raise LimitExceeded("direction search", n, UNBOUNDED_LIMIT)
    free = net.uncapped()
    lins, Ms = _all_m_sigma(free)
    rng = np.random.default_rng(seed)
    D = rng.standard_normal((samples, n))
    D /= np.linalg.norm(D, axis=1, keepdims=True)
    mu1, mu2, _ = _mu_values(Ms, D)
    prod = mu1 * mu2

    def at(v):
        v = np.asarray(v, dtype=float)
        nv = np.linalg.norm(v)
        if nv == 0:
            return -np.inf, -np.inf, v
        v = v / nv
        a, b, _ = _mu_values(Ms, v[None])
        return float(a[0]), float(b[0]), v

    starts_p = D[np.argsort(-prod)[:refine]]
    starts_2 = D[np.argsort(-mu2)[:refine]]
    best_p, best_pd = float(prod.max()), D[int(np.argmax(prod))]
    best_2, best_2d = float(mu2.max()), D[int(np.argmax(mu2))]
    opts = dict(xatol=1e-10, fatol=1e-12, maxiter=400 * n)
    for s in starts_p:
        res = minimize(lambda v: -np.prod(at(v)[:2]), s, method="Nelder-Mead", options=opts)
        a, b, v = at(res.x)
        if a * b > best_p:
            best_p, best_pd = a * b, v
    for s in starts_2:
        res = minimize(lambda v: -at(v)[1], s, method="Nelder-Mead", options=opts)
        a, b, v = at(res.x)
        if b > best_2:
            best_2, best_2d = b, v
    a1, a2, _ = at(best_pd)

    witness = DirectionSearch(best_p, best_pd, a1, a2, best_2, samples=samples)
    if best_2 <= tol:
        return witness
    d = best_2d
    _, _, top = _mu_values(Ms, d[None])
    regs = tuple(SwitchingIndex(tuple(np.where(lins[int(top[k, 0])] > 0, LINEAR, INACTIVE)))
                 for k in range(2))
    if not net.unbounded:
        xs = np.array([candidate(free, d, r).state for r in regs])
        peak = np.max(xs / np.where(net.bounded, net.m, np.inf)[None], initial=0.0)
        if peak > 0.5:
            d = d * (0.5 / peak)
    eqs = [e for e in enumerate_equilibria(net, d, tol) if e.valid]
    return DirectionSearch(best_p, best_pd, a1, a2, best_2, d, regs, tuple(eqs), samples)


@dataclass(frozen=True, eq=False)
class EUEReport:
    p_matrix: ClassResult
    equilibrium_counts: tuple[int, ...]
    inputs: np.ndarray
    duplicate_groups: int
    search: Optional[DirectionSearch] = None

    @property
    def consistent(self) -> bool:
        """If I - W is a P-matrix, every spot check found exactly one equilibrium."""
        if self.p_matrix.verdict is Verdict.TRUE:
            return all(c == 1 for c in self.equilibrium_counts)
        return True


def eue_certificate(net: NetworkSpec, draws=100, seed=0, search=True, tol=DEFAULT_TOL) -> EUEReport:
    """Unique equilibrium for every input iff ``I - W`` is a P-matrix.

    A true verdict is spot-checked by enumeration on ``draws`` standard
    normal inputs. A false verdict triggers ``direction_search`` for an
    input with several equilibria (unless ``search`` is False).
    """
    p = is_p_matrix(np.eye(net.n) - net.W, tol=tol)
    counts, dup = [], 0
    inputs = np.zeros((0, net.n))
    if p.verdict is Verdict.TRUE:
        rng = np.random.default_rng(seed)
        inputs = rng.standard_normal((draws, net.n))
        for d in inputs:
            eqs = enumerate_equilibria(net, d, tol)
            counts.append(len(eqs))
            dup += sum(1 for e in eqs if e.shared_with)
    found = None
    if p.verdict is Verdict.FALSE and search:
        found = direction_search(net, seed=seed, tol=tol)
    return EUEReport(p, tuple(counts), inputs, dup, found)


@dataclass(frozen=True, eq=False)
class PivotPairReport:
    verdict: Verdict
    p_matrix: Verdict
    pairs_checked: int
    failure: Optional[tuple[SwitchingIndex, SwitchingIndex, tuple[int, ...]]] = None

    @property
    def agrees(self) -> bool:
        return self.verdict is self.p_matrix


def pivot_pair_check(net: NetworkSpec, tol=DEFAULT_TOL, limit=PAIR_LIMIT,
                     restrict=True) -> PivotPairReport:
    """Check every ordered pair of distinct regions for coherent orientation.

    For regions ``s1 != s2`` the matrix ``M_s1 M_s2^-1`` has identity
    principal blocks on the nodes where both regions agree, so the test is
    applied to ``-Gamma``, the principal submatrix of ``-M_s1 M_s2^-1`` on
    the nodes where they differ. All pairs pass iff ``I - W`` is a
    P-matrix. ``restrict=False`` tests the whole ``-M_s1 M_s2^-1``
    instead, which fails for any pair sharing a node (even ``W = 0``).
    """
    _require_unbounded(net, "pivot_pair_check")
    n = net.n
    if n > limit:
        raise LimitExceeded("pivot pair check", n, limit)
    lins, Ms = _all_m_sigma(net)
    # M_s^-1 = (I - W S)(2S - I)
    Minv = (np.eye(n)[None] - net.W[None] * lins[:, None, :]) * (2 * lins - 1)[:, None, :]
    k = len(lins)
    i1, i2 = np.nonzero(~np.eye(k, dtype=bool))
    G = -np.einsum("pij,pjk->pik", Ms[i1], Minv[i2])
    differ = lins[i1] != lins[i2] if restrict else np.ones((len(i1), n), dtype=bool)
    status = np.full(len(i1), 1, dtype=np.int8)  # 1 ok, 0 marginal, -1 fail
    first_fail: dict[int, tuple[int, ...]] = {}
    for size in range(1, n + 1):
        for combo in itertools.combinations(range(n), size):
            idx = list(combo)
            relevant = differ[:, idx].all(axis=1)
            minors = np.linalg.det(G[:, idx][:, :, idx])
            neg = relevant & (minors < -tol)
            for p in np.flatnonzero(neg & (status > -1)):
                first_fail.setdefault(int(p), combo)
            weak = relevant & (minors <= tol) & (status == 1)
            status = np.where(neg, -1, np.where(weak, 0, status))
    p_verdict = is_p_matrix(np.eye(n) - net.W, tol=tol).verdict
    verdict = {1: Verdict.TRUE, 0: Verdict.MARGINAL, -1: Verdict.FALSE}[int(status.min())]
    failure = None
    if verdict is Verdict.FALSE:
        p = min(first_fail)
        to_sigma = lambda j: SwitchingIndex(tuple(np.where(lins[j] > 0, LINEAR, INACTIVE)))
        failure = (to_sigma(int(i1[p])), to_sigma(int(i2[p])), first_fail[p])
    return PivotPairReport(verdict, p_verdict, len(i1), failure)


@dataclass(frozen=True, eq=False)
class PartialEUEReport:
    sigma_bar: SwitchingIndex
    sub_p_matrix: Verdict
    counts: tuple[int, ...]

    @property
    def max_count(self) -> int:
        return max(self.counts, default=0)

    @property
    def holds(self) -> bool:
        """At most one equilibrium in the down-set whenever the sub-block is P."""
        return self.sub_p_matrix is not Verdict.TRUE or self.max_count <= 1


def partial_eue(net: NetworkSpec, sigma_bar: SwitchingIndex, draws=100, seed=0,
                inputs=None, tol=DEFAULT_TOL) -> PartialEUEReport:
    """Count equilibria in the union of regions below ``sigma_bar``.

    If ``I - W`` restricted to the linear nodes of ``sigma_bar`` is a
    P-matrix, that union holds at most one equilibrium for every input.
    """
    _require_unbounded(net, "partial_eue")
    sigma_bar.check(net)
    sel = list(np.flatnonzero(sigma_bar.linear))
    if sel:
        sub = np.eye(len(sel)) - net.W[np.ix_(sel, sel)]
        verdict = is_p_matrix(sub, tol=tol).verdict
    else:
        verdict = Verdict.TRUE
    if inputs is None:
        inputs = np.random.default_rng(seed).standard_normal((draws, net.n))
    allowed = sigma_bar.linear
    counts = []
    for d in inputs:
        eqs = enumerate_equilibria(net, d, tol)
        counts.append(sum(1 for e in eqs
                          if any(not np.any(s.linear & ~allowed) for s in e.sigmas)))
    return PartialEUEReport(sigma_bar, verdict, tuple(counts))
