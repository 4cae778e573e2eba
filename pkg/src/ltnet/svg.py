"""Static SVG figures: 2-node phase portraits and ensemble curves.

Rendering goes through matplotlib's SVG backend; output is a single
self-contained document (glyphs embedded as paths, no external CSS).
"""

from __future__ import annotations

import io
from typing import Optional, Sequence

import numpy as np

from .dynamics import simulate_batch
from .equilibria import STABLE, enumerate_equilibria
from .model import NetworkSpec, vector_field


def _pyplot():
    import matplotlib
    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt
    plt.rcParams["svg.hashsalt"] = "ltnet"  # stable element ids
    return plt


def _to_svg(fig) -> str:
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": "ltnet"})
    _pyplot().close(fig)
    return buf.getvalue()


def phase_portrait(net: NetworkSpec, d, extent: Optional[Sequence[float]] = None, trajectories=12,
                   seed=0, horizon=None, grid=25, title: Optional[str] = None) -> str:
    """Vector field, nullclines, equilibria and sample trajectories of a 2-node network.

    Stable equilibria are filled dots, all others hollow. ``extent`` is
    ``(x0max, x1max)``; by default it covers the equilibria and the caps.
    """
    if net.n != 2:
        raise ValueError(f"phase portraits need a 2-node network, got n={net.n}")
    d = np.asarray(d, dtype=float)
    eqs = enumerate_equilibria(net, d)
    if extent is None:
        top = max([1.0] + [float(np.max(e.state)) * 1.5 for e in eqs])
        extent = tuple(min(top, m) if np.isfinite(m) else top for m in net.m)
    xmax, ymax = extent
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 5))

    gx, gy = np.meshgrid(np.linspace(0, xmax, grid), np.linspace(0, ymax, grid))
    F = vector_field(net, d, np.stack([gx, gy], axis=-1))
    ax.streamplot(gx, gy, F[..., 0], F[..., 1], color="#c8c8c8", density=1.0, linewidth=0.6)

    fx, fy = np.meshgrid(np.linspace(0, xmax, 300), np.linspace(0, ymax, 300))
    G = vector_field(net, d, np.stack([fx, fy], axis=-1))
    ax.contour(fx, fy, G[..., 0], levels=[0.0], colors="#1f77b4", linewidths=1.2)
    ax.contour(fx, fy, G[..., 1], levels=[0.0], colors="#d62728", linewidths=1.2)

    if trajectories:
        rng = np.random.default_rng(seed)
        X0 = rng.uniform(0, 1, (trajectories, 2)) * np.array([xmax, ymax])
        T = horizon or 20 * net.tau
        _, X = simulate_batch(net, d, X0, T)
        stable = [e.state for e in eqs if e.stability == STABLE]
        palette = ["#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]
        for k in range(trajectories):
            path = X[:, k]
            colour = "#555555"
            if stable:
                j = int(np.argmin([np.max(np.abs(path[-1] - s)) for s in stable]))
                colour = palette[j % len(palette)]
            ax.plot(path[:, 0], path[:, 1], color=colour, linewidth=0.9)
    for e in eqs:
        filled = e.stability == STABLE
        ax.plot(*e.state, "o", markersize=7, markeredgecolor="black",
                markerfacecolor="black" if filled else "white", zorder=5)
    ax.set_xlim(0, xmax)
    ax.set_ylim(0, ymax)
    names = net.labels or ("x0", "x1")
    ax.set_xlabel(names[0])
    ax.set_ylabel(names[1])
    if title:
        ax.set_title(title)
    return _to_svg(fig)


def ensemble_probability_plot(report) -> str:
    """Class probabilities against n, with one standard error bars."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for mu in sorted({r.mu for r in report.rows}):
        rows = [r for r in report.rows if r.mu == mu]
        ns = [r.n for r in rows]
        suffix = f" (mu={mu:g})" if len({r.mu for r in report.rows}) > 1 else ""
        for attr, label in [("p_matrix", "I-W in P"), ("hurwitz", "-I+W in H"), ("abs_schur", "rho(|W|)<1")]:
            pts = [(r.n, getattr(r, attr), getattr(r, attr + "_se")) for r in rows
                   if getattr(r, attr) is not None]
            if pts:
                n, p, se = zip(*pts)
                ax.errorbar(n, p, yerr=se, marker="o", markersize=3, capsize=2, label=label + suffix)
    ax.set_xlabel("n")
    ax.set_ylabel("probability")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(fontsize=7)
    return _to_svg(fig)


def scaling_plot(fit) -> str:
    """Log-log plot of mean spectral radius against n with the fitted line."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 4))
    ns = np.array(fit.n_values, dtype=float)
    ax.loglog(ns, np.exp(fit.mean_log_rho), "o", label="samples (geometric mean)")
    grid = np.geomspace(ns.min(), ns.max(), 50)
    ax.loglog(grid, np.exp(fit.alpha * np.log(grid) + fit.beta), "-",
              label=f"fit: alpha={fit.alpha:.3f}, beta={fit.beta:.3f}")
    ax.set_xlabel("n")
    ax.set_ylabel("rho(|W|)" if fit.statistic == "abs" else "rho(W)")
    ax.legend(fontsize=8)
    return _to_svg(fig)
