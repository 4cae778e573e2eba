"""Command-line interface: ``ltnet <subcommand> ...``.

Exit status is 0 on success, 2 on invalid input (the message names the
offending field) and 3 when an exhaustive computation is refused for size.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import simulate
from .ensemble import EnsembleConfig, class_probability_curve, spectral_scaling_fit
from .equilibria import enumerate_equilibria, equilibria_csv
from .errors import LimitExceeded, LtnetError
from .inhibition import (closed_loop_simulate, design_feedback_gain, design_feedforward,
                         design_report, verify_equivalences)
from .linalg import DEFAULT_TOL
from .matclass import LMI_BUDGET, certify
from .netfile import NetworkFile, load
from .wilsoncowan import WilsonCowanParams, analytic_conditions, inputs, reduce

EXIT_OK, EXIT_INPUT, EXIT_LIMIT = 0, 2, 3

log = logging.getLogger("ltnet")


class InputError(LtnetError, ValueError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"field '{field}': {message}")


def _floats(text, field, n=None):
    try:
        vals = np.array([float(v) for v in text.replace(",", " ").split()])
    except ValueError:
        raise InputError(field, f"expected numbers, got {text!r}") from None
    if n is not None and vals.size != n:
        raise InputError(field, f"expected {n} values, got {vals.size}")
    return vals


def _input_vector(args, nf: NetworkFile):
    if args.input is not None:
        return _floats(args.input, "--input", nf.net.n)
    if nf.d is not None:
        return nf.d
    raise InputError("d", "no input vector: give --input or a 'd' field in the file")


def _emit(args, text: str):
    if args.output in (None, "-"):
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(args.output).write_text(text)
        log.info("wrote %s", args.output)


def cmd_certify(args):
    nf = load(args.network)
    cert = certify(nf.net.W, tol=args.tol, budget=args.lmi_budget)
    header = f"# ltnet certificate v1\nn = {nf.net.n}\n"
    _emit(args, header + cert.report() + "\n")


def cmd_equilibria(args):
    nf = load(args.network)
    d = _input_vector(args, nf)
    eqs = enumerate_equilibria(nf.net, d, tol=args.tol)
    _emit(args, equilibria_csv(eqs, nf.net.n))


def cmd_simulate(args):
    nf = load(args.network)
    d = _input_vector(args, nf)
    x0 = _floats(args.x0, "--x0", nf.net.n) if args.x0 else np.zeros(nf.net.n)
    traj = simulate(nf.net, d, x0, args.horizon, args.step)
    _emit(args, traj.to_csv())


def cmd_portrait(args):
    from .svg import phase_portrait
    nf = load(args.network)
    d = _input_vector(args, nf)
    extent = tuple(_floats(args.extent, "--extent", 2)) if args.extent else None
    _emit(args, phase_portrait(nf.net, d, extent, trajectories=args.trajectories, seed=args.seed))


def cmd_inhibit(args):
    nf = load(args.network)
    part = nf.partition()
    if args.mode == "feedforward":
        design = design_feedforward(part)
        eqv = None
    else:
        design = design_feedback_gain(part)
        eqv = verify_equivalences(part, design, tol=args.tol)
        if args.rectified:
            design = design.with_rectification()
    result = None
    if args.horizon:
        x0 = _floats(args.x0, "--x0", part.net.n) if args.x0 else np.ones(part.net.n)
        result = closed_loop_simulate(part, design, x0, args.horizon)
    _emit(args, design_report(design, eqv, result))


def cmd_wc(args):
    p = WilsonCowanParams(args.n, args.alpha, args.w_ee, args.w_ei, args.w_ie, args.w_ii,
                          args.d_e, args.d_i, args.m_e, args.m_i, args.tau)
    report = analytic_conditions(p, tol=args.tol)
    if args.svg:
        from .svg import phase_portrait
        Path(args.svg).write_text(phase_portrait(reduce(p), inputs(p), seed=args.seed))
    _emit(args, "# ltnet wilson-cowan report v1\n" + report.text() + "\n")


def cmd_ensemble(args):
    cfg = EnsembleConfig(
        n_values=tuple(int(v) for v in _floats(args.n_values, "--n-values")),
        samples=args.samples, mu=args.mu, sigma=args.sigma, sparsity=args.sparsity,
        excitatory=args.excitatory,
        mu_values=tuple(_floats(args.mu_values, "--mu-values")) if args.mu_values else None,
        seed=args.seed)
    if args.fit:
        fit = spectral_scaling_fit(cfg, tuple(int(v) for v in _floats(args.fit, "--fit")),
                                   statistic=args.statistic)
        if args.format == "svg":
            from .svg import scaling_plot
            _emit(args, scaling_plot(fit))
        else:
            lines = ["# ltnet scaling fit v1", "n,mean_log_rho"]
            lines += [f"{n},{v:.10g}" for n, v in zip(fit.n_values, fit.mean_log_rho)]
            lines.append(f"# alpha={fit.alpha:.6f} beta={fit.beta:.6f} statistic={fit.statistic}")
            _emit(args, "\n".join(lines) + "\n")
        return
    report = class_probability_curve(cfg)
    if args.format == "svg":
        from .svg import ensemble_probability_plot
        _emit(args, ensemble_probability_plot(report))
    else:
        _emit(args, report.to_csv())


def _cap(text):
    return float("inf") if text.strip().lower() in ("inf", "infinity") else float(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", help="output file (default: stdout)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized steps (default 0)")
    common.add_argument("--threads", type=int, default=None,
                        help="cap on BLAS/LAPACK worker threads (default: library default)")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL,
                        help=f"tolerance of strict inequality tests (default {DEFAULT_TOL:g})")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="ltnet", description="Analysis of linear-threshold rate networks.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("certify", parents=[common], help="matrix-class certificate of W")
    s.add_argument("network", help="network JSON file")
    s.add_argument("--lmi-budget", type=int, default=LMI_BUDGET,
                   help="iteration budget of the common Lyapunov search")
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("equilibria", parents=[common], help="enumerate all equilibria (CSV)")
    s.add_argument("network")
    s.add_argument("--input", help="input vector d, e.g. '1,1' (overrides the file)")
    s.set_defaults(func=cmd_equilibria)

    s = sub.add_parser("simulate", parents=[common], help="simulate a trajectory (CSV)")
    s.add_argument("network")
    s.add_argument("--input")
    s.add_argument("--x0", help="initial state (default: zeros)")
    s.add_argument("--horizon", type=float, default=20.0)
    s.add_argument("--step", type=float, default=None, help="RK4 step (default: automatic)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("portrait", parents=[common], help="phase portrait of a 2-node network (SVG)")
    s.add_argument("network")
    s.add_argument("--input")
    s.add_argument("--extent", help="plot box 'x0max,x1max'")
    s.add_argument("--trajectories", type=int, default=12)
    s.set_defaults(func=cmd_portrait)

    s = sub.add_parser("inhibit", parents=[common], help="selective inhibition design (text)")
    s.add_argument("network", help="network JSON file with a 'partition' field")
    s.add_argument("--mode", choices=("feedforward", "feedback"), default="feedback")
    s.add_argument("--rectified", action="store_true", help="use u = [K x]_0^inf")
    s.add_argument("--horizon", type=float, default=0.0, help="also simulate the closed loop")
    s.add_argument("--x0")
    s.set_defaults(func=cmd_inhibit)

    s = sub.add_parser("wc", parents=[common], help="Wilson-Cowan closed-form conditions (text)")
    for name in ("n", "alpha", "w-ee", "w-ei", "w-ie", "w-ii"):
        s.add_argument(f"--{name}", type=float, required=True)
    s.add_argument("--d-e", type=float, default=0.0)
    s.add_argument("--d-i", type=float, default=0.0)
    s.add_argument("--m-e", type=_cap, default=float("inf"))
    s.add_argument("--m-i", type=_cap, default=float("inf"))
    s.add_argument("--tau", type=float, default=1.0)
    s.add_argument("--svg", help="also write a phase portrait here")
    s.set_defaults(func=cmd_wc)

    s = sub.add_parser("ensemble", parents=[common], help="random-network class statistics")
    s.add_argument("--n-values", default="2,4,6,8,10,12,14,16")
    s.add_argument("--samples", type=int, default=1000)
    s.add_argument("--mu", type=float, default=-0.7)
    s.add_argument("--sigma", type=float, default=0.9)
    s.add_argument("--sparsity", type=float, default=0.2)
    s.add_argument("--excitatory", type=float, default=0.8)
    s.add_argument("--mu-values", help="sweep the log-normal mu over these values")
    s.add_argument("--fit", help="sizes for the spectral-radius scaling fit instead of class curves")
    s.add_argument("--statistic", choices=("abs", "signed"), default="abs")
    s.add_argument("--format", choices=("csv", "svg"), default="csv")
    s.set_defaults(func=cmd_ensemble)
    return p


def _thread_limit(n):
    if n is None:
        return contextlib.nullcontext()
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover
        return contextlib.nullcontext()
    return threadpool_limits(limits=max(1, n))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="ltnet: %(message)s")
    try:
        with _thread_limit(args.threads):
            args.func(args)
    except LimitExceeded as exc:
        print(f"ltnet: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except (LtnetError, ValueError) as exc:
        print(f"ltnet: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
