"""Command-line front end: critical values, limit functions and Monte Carlo runs."""

import argparse
import itertools
import logging
import sys
from typing import List, Optional, Sequence

from dotenv import load_dotenv

from . import __version__
from .config import load_experiment_config, resolve_log_level, resolve_workers
from .critical_values import solve_c1, solve_c2
from .exceptions import (
    ConfigError,
    DgpError,
    EngineError,
    IntervalCiError,
    InvalidParameterError,
    SolverError,
)
from .limit_power import LimitSigmas, default_h_grid, eval_h, eval_w, h_monotonicity_scan
from .mc_engine import DgpSpec, near1_diagnostic, power_curve
from .utils import parse_extended_real, parse_int_list, parse_real_list, write_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3

POWER_HEADER = ("ci_kind", "n", "psi", "theta", "cover_e", "cover_i", "diff", "mc_se", "reps", "seed")
NEAR1_HEADER = (
    "rho",
    "sigma_l",
    "sigma_u",
    "mu",
    "n",
    "raw_rate",
    "oracle_rate",
    "mc_se",
    "delivered_rate",
)


def _real(text: str) -> float:
    try:
        return parse_extended_real(text)
    except InvalidParameterError as e:
        raise argparse.ArgumentTypeError(str(e))


def _real_list(text: str) -> List[float]:
    try:
        return parse_real_list(text)
    except InvalidParameterError as e:
        raise argparse.ArgumentTypeError(str(e))


def _int_list(text: str) -> List[int]:
    try:
        return parse_int_list(text)
    except InvalidParameterError as e:
        raise argparse.ArgumentTypeError(str(e))


def cmd_critval(args: argparse.Namespace) -> int:
    """Print CI1 or CI2 critical values as a one-row CSV."""
    if args.ci == 1:
        result = solve_c1(args.delta, args.sigma_l, args.sigma_u, args.alpha)
        write_csv(
            ("ci", "alpha", "delta", "sigma_l", "sigma_u", "c", "residual"),
            [(1, args.alpha, args.delta, args.sigma_l, args.sigma_u, result.c, result.residual)],
            args.output,
        )
        return EXIT_OK

    if args.rho is None:
        error_msg = "--rho is required with --ci 2"
        logger.error(error_msg)
        raise InvalidParameterError(error_msg)
    pair = solve_c2(args.delta, args.sigma_l, args.sigma_u, args.rho, args.alpha)
    write_csv(
        (
            "ci",
            "alpha",
            "delta",
            "sigma_l",
            "sigma_u",
            "rho",
            "c_l",
            "c_u",
            "binding_l",
            "binding_u",
            "objective",
            "prob_l",
            "prob_u",
            "branch",
        ),
        [
            (
                2,
                args.alpha,
                args.delta,
                args.sigma_l,
                args.sigma_u,
                args.rho,
                pair.c_l,
                pair.c_u,
                pair.binding[0],
                pair.binding[1],
                pair.objective,
                pair.constraint_probs[0],
                pair.constraint_probs[1],
                pair.branch,
            )
        ],
        args.output,
    )
    return EXIT_OK


def cmd_power(args: argparse.Namespace) -> int:
    """Run the power-curve experiment described by a configuration file."""
    config = load_experiment_config(args.config)
    workers = resolve_workers(args.workers, config.workers)

    points = []
    for ci_kind in config.ci_kinds:
        points.extend(
            power_curve(
                config.dgp,
                config.alternative,
                config.n_grid,
                config.psi_grid,
                ci_kind,
                config.alpha,
                config.reps,
                config.seed,
                mu=config.mu,
                plugin_noise=config.plugin_noise,
                workers=workers,
                use_table=config.ci2_table,
            )
        )

    rows = [
        (
            p.ci_kind.value,
            p.n,
            p.psi,
            p.theta,
            p.cover_rate_e,
            p.cover_rate_i,
            p.diff,
            p.mc_se,
            p.reps,
            p.seed,
        )
        for p in points
    ]
    write_csv(POWER_HEADER, rows, args.output or config.output)

    if config.plot is not None:
        from .plotting import plot_power_curves

        plot_power_curves(points, config.plot, config.alpha)
    return EXIT_OK


def cmd_limit(args: argparse.Namespace) -> int:
    """Evaluate H, W or the monotonicity scan of H over a grid."""
    if args.fn == "h-scan":
        if args.sigma or args.mu or args.psi:
            grid = list(
                itertools.product(args.sigma or [1.0], args.mu or [0.0], args.psi or [0.0])
            )
        else:
            grid = default_h_grid()
        violations = h_monotonicity_scan(grid, args.alpha)
        write_csv(
            ("mu", "psi", "sigma_1", "sigma_2", "h_1", "h_2"),
            [(v.mu, v.psi, v.sigma_1, v.sigma_2, v.h_1, v.h_2) for v in violations],
            args.output,
        )
        return EXIT_OK

    mus = args.mu or [0.0]
    psis = args.psi or [0.0]
    if args.fn == "h":
        rows = [
            (sigma, mu, psi, args.alpha, eval_h(sigma, mu, psi, args.alpha))
            for sigma, mu, psi in itertools.product(args.sigma or [1.0], mus, psis)
        ]
        write_csv(("sigma", "mu", "psi", "alpha", "h"), rows, args.output)
        return EXIT_OK

    sig = LimitSigmas(args.sigma_l, args.sigma_u, args.rho)
    rows = [
        (
            sig.sigma_l,
            sig.sigma_u,
            sig.rho,
            mu,
            psi,
            args.alpha,
            args.side,
            eval_w(sig, mu, psi, args.alpha, side=args.side),
        )
        for mu, psi in itertools.product(mus, psis)
    ]
    write_csv(
        ("sigma_l", "sigma_u", "rho", "mu", "psi", "alpha", "side", "w"), rows, args.output
    )
    return EXIT_OK


def cmd_near1(args: argparse.Namespace) -> int:
    """Report raw and delivered ordering-violation rates."""
    specs = [
        DgpSpec(0.0, 0.0, args.sigma_l, args.sigma_u, rho) for rho in args.rho
    ]
    records = near1_diagnostic(
        specs,
        args.n,
        mu=args.mu,
        reps=args.reps,
        seed=args.seed,
        workers=resolve_workers(args.workers),
    )
    rows = [
        (
            r.rho,
            r.sigma_l,
            r.sigma_u,
            r.mu,
            r.n,
            r.raw_rate,
            r.oracle_rate,
            r.mc_se,
            r.delivered_rate,
        )
        for r in records
    ]
    write_csv(NEAR1_HEADER, rows, args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="interval-ci",
        description="Confidence intervals for interval-identified parameters",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--workers", type=int, help="worker processes (default $INTERVAL_CI_WORKERS or 1)")
    parser.add_argument("--log-level", help="log level (default $INTERVAL_CI_LOG_LEVEL or WARNING)")
    parser.add_argument("--log-file", help="also write logs to this file")
    sub = parser.add_subparsers(dest="command", required=True)

    critval = sub.add_parser("critval", help="solve for critical values")
    critval.add_argument("--ci", type=int, choices=(1, 2), required=True)
    critval.add_argument("--alpha", type=_real, required=True)
    critval.add_argument("--delta", type=_real, required=True)
    critval.add_argument("--sigma-l", type=_real, required=True)
    critval.add_argument("--sigma-u", type=_real, required=True)
    critval.add_argument("--rho", type=_real)
    critval.add_argument("--output", help="CSV path (default stdout)")
    critval.set_defaults(func=cmd_critval)

    power = sub.add_parser("power", help="Monte Carlo coverage and power curves")
    power.add_argument("--config", required=True, help="experiment configuration file")
    power.add_argument("--output", help="CSV path (overrides the config)")
    power.set_defaults(func=cmd_power)

    limit = sub.add_parser("limit", help="limiting coverage functions")
    limit.add_argument("--fn", choices=("h", "w", "h-scan"), required=True)
    limit.add_argument("--alpha", type=_real, default=0.05)
    limit.add_argument("--sigma", type=_real_list, help="comma-separated sigmas")
    limit.add_argument("--mu", type=_real_list, help="comma-separated mus")
    limit.add_argument("--psi", type=_real_list, help="comma-separated psis")
    limit.add_argument("--sigma-l", type=_real, default=1.0)
    limit.add_argument("--sigma-u", type=_real, default=1.0)
    limit.add_argument("--rho", type=_real, default=1.0)
    limit.add_argument("--side", choices=("lower", "upper"), default="lower")
    limit.add_argument("--output", help="CSV path (default stdout)")
    limit.set_defaults(func=cmd_limit)

    near1 = sub.add_parser("near1", help="ordering-violation diagnostic")
    near1.add_argument("--rho", type=_real_list, default=[1.0, 0.5, 0.99])
    near1.add_argument("--sigma-l", type=_real, default=1.0)
    near1.add_argument("--sigma-u", type=_real, default=1.0)
    near1.add_argument("--mu", type=_real, default=1.0)
    near1.add_argument("--n", type=_int_list, default=[100, 1000, 10000])
    near1.add_argument("--reps", type=int, default=100_000)
    near1.add_argument("--seed", type=int, default=0)
    near1.add_argument("--output", help="CSV path (default stdout)")
    near1.set_defaults(func=cmd_near1)
    return parser


def _setup_logging(level: str, log_file: Optional[str]) -> None:
    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(
        level=getattr(logging, level),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=handlers,
        force=True,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns the process exit status."""
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_INPUT

    try:
        _setup_logging(resolve_log_level(args.log_level), args.log_file)
        return args.func(args)
    except (InvalidParameterError, ConfigError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, EngineError, DgpError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except IntervalCiError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
