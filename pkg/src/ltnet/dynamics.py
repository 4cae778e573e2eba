"""Fixed-step simulation and empirical stability / boundedness probes.

Integration is classical RK4 on a uniform grid. The default step
``h = min(tau/20, 0.2 tau / (1 + ||W||))`` keeps the scheme well inside its
stability region for the globally Lipschitz field, and the fixed grid makes
runs bit-reproducible. Batches of initial conditions are integrated
together; each row is an independent trajectory.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import ShapeError, StepSizeError
from .linalg import excitatory_part, operator_norm, spectral_radius
from .model import NetworkSpec, as_vector, threshold

CLAMP_TOL = 1e-9
CLUSTER_RADIUS = 1e-4
RATE_WINDOW = (1e-8, 1e-2)
PROBE_HORIZON = 400.0        # default probe horizon, in units of tau
MAX_PROBE_HORIZON = 20_000.0  # ceiling for the adaptive horizon, in units of tau

Input = Union[np.ndarray, Sequence[float], Callable[[float], np.ndarray]]


def default_step(net: NetworkSpec) -> float:
    return min(net.tau / 20.0, 0.2 * net.tau / (1.0 + operator_norm(net.W)))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States on a uniform grid. ``inputs`` holds ``d`` at every grid point."""

    t: np.ndarray
    x: np.ndarray
    input_kind: str
    inputs: np.ndarray

    @property
    def h(self) -> float:
        return float(self.t[1] - self.t[0]) if self.t.size > 1 else 0.0

    @property
    def final(self) -> np.ndarray:
        return self.x[-1]

    def to_csv(self) -> str:
        return trajectory_csv(self.t, self.x)


def trajectory_csv(t, x) -> str:
    buf = io.StringIO()
    n = x.shape[1]
    buf.write("# ltnet trajectory csv v1\n")
    buf.write(",".join(["t"] + [f"x{i}" for i in range(n)]) + "\n")
    np.savetxt(buf, np.column_stack([t, x]), delimiter=",", fmt="%.12g")
    return buf.getvalue()


def _input_fn(d, n):
    if callable(d):
        def fn(t):
            return np.asarray(d(t), dtype=float)
        return fn, "sampled"
    d = np.asarray(d, dtype=float)
    if d.shape[-1] != n:
        raise ShapeError(f"input d must have {n} components, got shape {d.shape}")
    return (lambda t: d), "constant"


def rk4(field_fn, x0, t0, h, steps, lower, upper, record=True):
    """Integrate ``dx/dt = field_fn(t, x)`` for ``steps`` steps of size ``h``.

    States are clamped to ``[lower, upper]`` after each step; a clamp larger
    than CLAMP_TOL signals a step that is too large.
    Returns the stacked states (steps+1, ...) or only the final state.
    """
    x = np.array(x0, dtype=float)
    out = [x.copy()] if record else None
    t = t0
    for _ in range(steps):
        k1 = field_fn(t, x)
        k2 = field_fn(t + h / 2, x + h / 2 * k1)
        k3 = field_fn(t + h / 2, x + h / 2 * k2)
        k4 = field_fn(t + h, x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        clamped = np.minimum(np.maximum(x, lower), upper)
        gap = np.max(np.abs(clamped - x)) if x.size else 0.0
        if gap > CLAMP_TOL:
            raise StepSizeError(f"state left the box by {gap:.3g}; reduce the step h={h:g}")
        x = clamped
        t += h
        if record:
            out.append(x.copy())
    return np.stack(out) if record else x


def _grid(horizon, h, tau):
    if h is None:
        raise ValueError("step size required")
    if h > tau / 20 * (1 + 1e-12):
        raise StepSizeError(f"step h={h:g} exceeds tau/20={tau / 20:g}")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    steps = max(1, math.ceil(horizon / h - 1e-9))
    return steps, horizon / steps


def simulate(net: NetworkSpec, d: Input, x0, horizon: float, h: Optional[float] = None) -> Trajectory:
    """Integrate the network from ``x0`` over ``[0, horizon]``.

    ``d`` is a constant n-vector or a callable ``t -> d(t)``. The step is
    shrunk slightly so the grid ends exactly at ``horizon``.
    """
    x0 = as_vector(x0, net.n, "x0")
    if x0.ndim != 1:
        raise ShapeError("x0 must be a single state; use simulate_batch for batches")
    if np.any(x0 < 0) or np.any(x0 > net.m):
        raise ValueError("x0 must lie in the box [0, m]")
    steps, h = _grid(horizon, h or default_step(net), net.tau)
    dfn, kind = _input_fn(d, net.n)
    W, m, tau = net.W, net.m, net.tau

    def f(t, x):
        return (-x + threshold(W @ x + dfn(t), m)) / tau

    x = rk4(f, x0, 0.0, h, steps, 0.0, m)
    t = h * np.arange(steps + 1)
    inputs = np.array([dfn(tk) for tk in t]) if kind == "sampled" else np.broadcast_to(dfn(0.0), x.shape).copy()
    return Trajectory(t, x, kind, inputs)


def simulate_batch(net: NetworkSpec, d, X0, horizon, h=None, record=True):
    """Integrate many initial conditions at once.

    ``d`` may be an n-vector, a (batch, n) array (one input per row) or a
    callable. Returns ``(t, X)`` with ``X`` of shape (steps+1, batch, n),
    or ``(t_final, X_final)`` when ``record`` is false.
    """
    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    steps, h = _grid(horizon, h or default_step(net), net.tau)
    dfn, _ = _input_fn(d, net.n)
    WT, m, tau = net.W.T, net.m, net.tau

    def f(t, x):
        return (-x + threshold(x @ WT + dfn(t), m)) / tau

    X = rk4(f, X0, 0.0, h, steps, 0.0, m, record=record)
    if record:
        return h * np.arange(steps + 1), X
    return h * steps, X


# -- comparison principle ----------------------------------------------------

@dataclass(frozen=True, eq=False)
class ComparisonResult:
    holds: bool
    max_excess: float
    trajectory: Trajectory
    excitatory: Trajectory


def excitatory_network(net: NetworkSpec) -> NetworkSpec:
    """The excitatory-only comparison network ``[W]_0^inf`` (uncapped)."""
    return NetworkSpec(excitatory_part(net.W), None, net.tau, net.labels)


def comparison_check(net: NetworkSpec, d: Input, x0, horizon, h=None, tol=1e-6) -> ComparisonResult:
    """Simulate the network and its excitatory-only version from the same
    state and check ``x(t) <= xbar(t)`` at every grid point."""
    if not net.unbounded:
        raise ValueError("comparison_check requires infinite caps at every node")
    xnet = excitatory_network(net)
    h = h or min(default_step(net), default_step(xnet))
    traj = simulate(net, d, x0, horizon, h)
    bar = simulate(xnet, d, x0, horizon, h)
    excess = float(np.max(traj.x - bar.x))
    return ComparisonResult(excess <= tol, excess, traj, bar)


# -- boundedness ---------------------------------------------------------------

def monotone_bound(net: NetworkSpec, dbar) -> Optional[np.ndarray]:
    """``nu(dbar) = (I - [W]_0^inf)^-1 [dbar]_0^inf`` when
    ``rho([W]_0^inf) < 1`` (clipped to finite caps); ``m`` itself when every
    cap is finite; otherwise None."""
    dbar = as_vector(dbar, net.n, "dbar")
    Wp = excitatory_part(net.W)
    if spectral_radius(Wp) < 1.0:
        nu = np.linalg.solve(np.eye(net.n) - Wp, np.maximum(dbar, 0.0))
        # the inverse is entrywise nonnegative; clip round-off below zero
        return np.clip(nu, 0.0, net.m)
    if np.all(net.bounded):
        return net.m.copy()
    return None


@dataclass(frozen=True, eq=False)
class BoundednessResult:
    """``bounded`` is True when guaranteed, None when inconclusive."""

    bounded: Optional[bool]
    nu: Optional[np.ndarray]
    rho_excitatory: float
    simulated_max: Optional[float] = None
    simulation_bounded: Optional[bool] = None


def boundedness_probe(net: NetworkSpec, dbar, horizon=None, bound=1e6, trials=10,
                      seed=0, x0_high=5.0) -> BoundednessResult:
    """Guarantee boundedness from ``rho([W]_0^inf) < 1`` (or finite caps);
    otherwise fall back to long simulations under ``d = dbar`` and report
    the largest state reached."""
    dbar = as_vector(dbar, net.n, "dbar")
    rho = spectral_radius(excitatory_part(net.W))
    nu = monotone_bound(net, dbar)
    if nu is not None:
        return BoundednessResult(True, nu, rho)
    horizon = horizon or 100 * net.tau
    rng = np.random.default_rng(seed)
    high = np.where(net.bounded, net.m, x0_high)
    X0 = rng.uniform(0, 1, (trials, net.n)) * high
    h = default_step(net)
    steps, h = _grid(horizon, h, net.tau)
    WT, m, tau = net.W.T, net.m, net.tau
    x = X0
    peak = float(np.max(x))
    chunk = max(1, int(net.tau / h))
    done = 0
    while done < steps and peak <= bound:
        k = min(chunk, steps - done)
        x = rk4(lambda t, y: (-y + threshold(y @ WT + dbar, m)) / tau, x, 0.0, h, k, 0.0, m, record=False)
        done += k
        peak = max(peak, float(np.max(x)))
    return BoundednessResult(None, None, rho, peak, peak <= bound)


# -- GES probe -----------------------------------------------------------------

def cluster_points(points, radius=CLUSTER_RADIUS) -> list[list[int]]:
    """Single-linkage clusters in the max norm; groups of row indices,
    ordered by their smallest member.

    Points are binned into cubes of side ``radius`` (each cube is linked
    internally), and only adjacent cubes are compared point by point, so
    many coincident end states cost little.
    """
    pts = np.asarray(points, dtype=float)
    k = len(pts)
    if k == 0:
        return []
    cells, inverse = np.unique(np.floor(pts / radius).astype(np.int64), axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    members = [np.flatnonzero(inverse == c) for c in range(len(cells))]
    trees = [cKDTree(pts[m]) for m in members]
    reach = np.nextafter(radius, np.inf)
    links = []
    for a, b in cKDTree(cells).query_pairs(1, p=np.inf, output_type="ndarray"):
        small, big = (a, b) if len(members[a]) <= len(members[b]) else (b, a)
        dist, _ = trees[big].query(pts[members[small]], k=1, p=np.inf, distance_upper_bound=reach)
        if np.any(dist <= radius):
            links.append((a, b))
    links = np.array(links, dtype=np.int64).reshape(-1, 2)
    graph = coo_matrix((np.ones(len(links)), (links[:, 0], links[:, 1])), shape=(len(cells),) * 2)
    _, labels = connected_components(graph, directed=False)
    groups: dict[int, list[int]] = {}
    for i in range(k):
        groups.setdefault(int(labels[inverse[i]]), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def fit_decay_rate(t, dist, window=RATE_WINDOW) -> Optional[float]:
    """Least-squares slope of ``log dist`` against ``t`` inside ``window``."""
    t = np.asarray(t, dtype=float)
    dist = np.asarray(dist, dtype=float)
    sel = (dist >= window[0]) & (dist <= window[1])
    if np.count_nonzero(sel) < 3:
        return None
    slope, _ = np.polyfit(t[sel], np.log(dist[sel]), 1)
    return float(slope)


@dataclass(frozen=True, eq=False)
class StabilityProbe:
    initial: np.ndarray
    final: np.ndarray
    converged: bool
    clusters: list[np.ndarray]
    cluster_sizes: list[int]
    rate: Optional[float]
    horizon: float

    @property
    def single_attractor(self) -> bool:
        return self.converged and len(self.clusters) == 1


def _trial_initials(net, trials, seed, x0_high):
    high = np.where(net.bounded, net.m, x0_high)
    rows = []
    for k in range(trials):
        rng = np.random.default_rng([seed, k])
        rows.append(rng.uniform(0.0, 1.0, net.n) * high)
    return np.array(rows)


def _run_to_rest(net, D, X0, chunk, max_horizon, rest_tol=1e-10, blowup=1e8):
    """Integrate until every row is stationary (or the horizon runs out).

    The record keeps ``tau/20`` spacing for the first ``PROBE_HORIZON * tau``
    and ``5 tau`` spacing afterwards, which bounds memory on long runs.
    """
    h = default_step(net)
    steps_per_chunk, h = _grid(chunk, h, net.tau)
    WT, m, tau = net.W.T, net.m, net.tau

    def f(t, x):
        return (-x + threshold(x @ WT + D, m)) / tau

    def kept(stride):
        keep = np.arange(stride, steps_per_chunk + 1, stride)
        if keep.size == 0 or keep[-1] != steps_per_chunk:
            keep = np.append(keep, steps_per_chunk)
        return keep

    fine = kept(max(1, int(round(tau / 20 / h))))
    coarse = kept(max(1, int(round(5 * tau / h))))
    pieces, times = [X0[None]], [np.zeros(1)]
    x = X0
    elapsed = 0.0
    while elapsed < max_horizon - 1e-12:
        X = rk4(f, x, elapsed, h, steps_per_chunk, 0.0, m)
        keep = fine if elapsed < PROBE_HORIZON * tau else coarse
        pieces.append(X[keep])
        times.append(elapsed + h * keep)
        x = X[-1]
        elapsed += h * steps_per_chunk
        speed = np.max(np.abs(f(0.0, x)), axis=1) * tau
        if np.all(speed < rest_tol) or np.max(x) > blowup:
            break
    traj = np.concatenate(pieces)
    t = np.concatenate(times)
    rest = np.max(np.abs(f(0.0, x)), axis=1) * tau < 1e-8
    return t, traj, rest


def probe_horizon(net: NetworkSpec) -> float:
    """Default horizon of the stability probe.

    When every mode matrix ``-I + L W`` is Hurwitz, the slowest of them
    (decay rate ``lam``) sets the horizon to ``40 tau / lam``, clipped to
    ``[PROBE_HORIZON, MAX_PROBE_HORIZON] * tau``. Otherwise, and for networks
    too large to scan all modes, it is ``PROBE_HORIZON * tau``.
    """
    n = net.n
    if n > 16:
        return PROBE_HORIZON * net.tau
    lins = ((np.arange(2 ** n)[:, None] >> np.arange(n)[None]) & 1).astype(float)
    A = -np.eye(n)[None] + lins[:, :, None] * net.W[None]
    slowest = float(-np.linalg.eigvals(A).real.max())
    if slowest <= 0:
        return PROBE_HORIZON * net.tau
    return float(np.clip(40.0 / slowest, PROBE_HORIZON, MAX_PROBE_HORIZON)) * net.tau


def _summarise(net, t, traj, rest, rows, radius):
    finals = traj[-1, rows]
    converged = bool(np.all(rest[rows]))
    groups = cluster_points(finals, radius)
    centers = [finals[g].mean(axis=0) for g in groups]
    rate = None
    if converged and len(groups) == 1:
        slopes = []
        for r in rows:
            dist = np.linalg.norm(traj[:, r] - traj[-1, r], axis=1)
            s = fit_decay_rate(t, dist)
            if s is not None:
                slopes.append(s)
        if slopes:
            rate = float(np.median(slopes))
        else:
            # started (numerically) at rest: decay rate unobservable
            rate = None
    return StabilityProbe(traj[0, rows], finals, converged, centers,
                          [len(g) for g in groups], rate, float(t[-1]))


def ges_probe(net: NetworkSpec, d, trials=20, seed=0, x0_high=5.0, chunk=None,
              max_horizon=None, radius=CLUSTER_RADIUS, initial=None) -> StabilityProbe:
    """Empirical global-stability probe from ``trials`` random initial states.

    Initial states are uniform in ``[0, m]`` for capped nodes and in
    ``[0, x0_high]`` otherwise, drawn from per-trial streams seeded by
    ``(seed, trial)``. Final states are clustered with single linkage; with
    a single cluster the exponential rate is the median slope of
    ``log ||x(t) - x_final||``. ``max_horizon`` defaults to
    ``probe_horizon(net)``.
    """
    return ges_survey(net, np.atleast_2d(d), trials, seed, x0_high, chunk,
                      max_horizon, radius, initial)[0]


def ges_survey(net: NetworkSpec, inputs, trials=20, seed=0, x0_high=5.0, chunk=None,
               max_horizon=None, radius=CLUSTER_RADIUS, initial=None) -> list[StabilityProbe]:
    """Run ``ges_probe`` for several constant inputs in one batched integration."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    if inputs.shape[1] != net.n:
        raise ShapeError(f"inputs must have {net.n} columns")
    X0 = _trial_initials(net, trials, seed, x0_high) if initial is None else np.atleast_2d(initial)
    trials = X0.shape[0]
    k = inputs.shape[0]
    D = np.repeat(inputs, trials, axis=0)
    Xall = np.tile(X0, (k, 1))
    chunk = chunk or 20 * net.tau
    max_horizon = max_horizon or probe_horizon(net)
    t, traj, rest = _run_to_rest(net, D, Xall, chunk, max_horizon)
    return [_summarise(net, t, traj, rest, list(range(j * trials, (j + 1) * trials)), radius)
            for j in range(k)]
