"""Command-line interface for clock_engine."""

import argparse
import logging
import sys
from pathlib import Path
from typing import NoReturn

from clock_engine.config import ConfigError, load_config, parse_field
from clock_engine.runner import ExperimentRunner, SweepResult
from clock_engine.utils import (
    MIXED_FUEL_COLUMNS,
    RUN_COLUMNS,
    SAMPLE_COLUMNS,
    THERM_COLUMNS,
    ZENO_COLUMNS,
    emit_csv,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_PARTIAL_FAILURE = 2

_GRID_FIELDS = ("l_values", "dt_values", "q_values", "n_beta_values", "tau_beta_values")

_SUBCOMMANDS = {
    "run": ("Evaluate one engine configuration.", "run_single", RUN_COLUMNS),
    "sweep": ("Sweep the (l, dt) grid, l-major.", "run_sweep", RUN_COLUMNS),
    "zeno": ("Closed-form Zeno work over the l grid.", "run_zeno", ZENO_COLUMNS),
    "therm": (
        "Selective cycles under sub-unit or bosonic thermalisation over the "
        "(l, dt, n_beta, tau_beta) grid.",
        "run_therm",
        THERM_COLUMNS,
    ),
    "mixed-fuel": (
        "Failure probabilities, output mixedness and net work for mixed qubit input.",
        "run_mixed_fuel",
        MIXED_FUEL_COLUMNS,
    ),
    "sample": (
        "Seeded Monte Carlo of selective cycles next to the exact average "
        "(demonstration only).",
        "run_sample",
        SAMPLE_COLUMNS,
    ),
}


def _shared_arguments() -> argparse.ArgumentParser:
    """Flags common to every subcommand; all default to None so lower layers can fill in."""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument(
        "-c",
        "--config",
        help=(
            "Config file with flat key=value lines named after the flags "
            "(e.g. beta=2, l_values=0.5:15:0.5). Values not given on the "
            "command line are read from here, then from CLOCK_ENGINE_<FIELD> "
            "environment variables."
        ),
        default=None,
    )
    parser.add_argument(
        "-o",
        "--out",
        help="Output CSV path. If not provided, the table is printed to stdout.",
        type=Path,
        default=None,
    )
    parser.add_argument("-l", "--l", type=float, help="Clock spin l (2l a positive integer).")
    parser.add_argument("--dt", type=float, help="Unit protocol duration.")
    parser.add_argument("-b", "--beta", type=float, help="Inverse bath temperature.")
    parser.add_argument("--tau-tilde", dest="tau_tilde", type=float, help="Start of the work window.")
    parser.add_argument("--tau-prime", dest="tau_prime", type=float, help="End of the work window.")
    parser.add_argument(
        "-m", "--mode", choices=("selective", "unselective", "zeno"), help="Engine mode."
    )
    parser.add_argument(
        "-t",
        "--therm-model",
        dest="therm_model",
        choices=("instant", "subunit", "bosonic"),
        help="Thermalisation model.",
    )
    parser.add_argument("--n-beta", dest="n_beta", type=int, help="Thermalisations per unit protocol.")
    parser.add_argument(
        "--tau-beta", dest="tau_beta", type=float, help="Bosonic equilibration time per thermalisation."
    )
    parser.add_argument(
        "--printed-coefficients",
        dest="printed_coefficients",
        action="store_const",
        const=True,
        help="Use the non-trace-preserving psi -> psi-bar bosonic coefficient.",
    )
    parser.add_argument(
        "--flip-convention",
        dest="flip_convention",
        choices=("printed", "conserving"),
        help="Energy accounting of the feedback flip after a misfire.",
    )
    parser.add_argument("--q", type=float, help="Input qubit mixedness in [0, 1].")
    parser.add_argument(
        "--classical-limit",
        dest="classical_limit",
        action="store_const",
        const=True,
        help="Mixed fuel in the infinite-clock Zeno limit.",
    )
    parser.add_argument("--n-samples", dest="n_samples", type=int, help="Sampled cycles.")
    parser.add_argument("--seed", type=int, help="Random seed of the sampler.")
    parser.add_argument("-j", "--workers", type=int, help="Worker processes for sweeps.")
    for name in _GRID_FIELDS:
        flag = "--" + name.replace("_", "-")
        parser.add_argument(
            flag,
            dest=name,
            help=(
                f"Grid for {name[:-7]}: comma-separated values and/or "
                "start:stop:step ranges, e.g. '0.5:2:0.5,4'."
            ),
        )
    parser.add_argument(
        "-v",
        "--verbose",
        action="store_true",
        help="Enable verbose (DEBUG level) logging.",
    )
    parser.add_argument(
        "-q",
        "--quiet",
        action="store_true",
        help="Suppress all output except errors and the table itself.",
    )
    return parser


class _ArgumentParser(argparse.ArgumentParser):
    """Parser whose usage errors exit with EXIT_CONFIG_ERROR instead of 2."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG_ERROR, f"{self.prog}: error: {message}\n")


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    """Parse command-line arguments.

    Args:
        argv: Argument list; defaults to ``sys.argv[1:]``.

    Returns:
        Parsed argument namespace.
    """
    parser = _ArgumentParser(
        description=(
            "Simulator of a qubit work-extraction engine driven by a quantum "
            "clock and stabilised by energy-harvesting measurements."
        ),
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    # subcommand parsers inherit _ArgumentParser
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    shared = _shared_arguments()
    for name, (help_text, _, _) in _SUBCOMMANDS.items():
        subparsers.add_parser(
            name,
            parents=[shared],
            help=help_text,
            description=help_text,
            formatter_class=argparse.ArgumentDefaultsHelpFormatter,
        )
    return parser.parse_args(argv)


def _configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    """Configure logging based on verbosity flags.

    Only the ``clock_engine`` logger is affected.

    Args:
        verbose: If True, set log level to DEBUG.
        quiet: If True, set log level to ERROR.
    """
    if quiet:
        level = logging.ERROR
    elif verbose:
        level = logging.DEBUG
    else:
        level = logging.INFO

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))

    pkg_logger = logging.getLogger("clock_engine")
    pkg_logger.setLevel(level)
    pkg_logger.addHandler(handler)


def _overrides(args: argparse.Namespace) -> dict:
    """Typed EngineConfig overrides from the parsed flags."""
    skip = {"command", "config", "out", "verbose", "quiet", *_GRID_FIELDS}
    overrides = {k: v for k, v in vars(args).items() if k not in skip}
    for name in _GRID_FIELDS:
        raw = getattr(args, name)
        overrides[name] = parse_field(name, raw) if raw is not None else None
    return overrides


def main(args: argparse.Namespace) -> int:
    """Execute one subcommand.

    Args:
        args: Parsed command-line arguments.

    Returns:
        Exit status: 0 on success, 1 on a configuration error, 2 if any row
        of the table failed.
    """
    try:
        config = load_config(_overrides(args), args.config)
    except (ConfigError, FileNotFoundError) as err:
        logger.error("Invalid configuration: %s", err)
        return EXIT_CONFIG_ERROR

    _, method, columns = _SUBCOMMANDS[args.command]
    runner = ExperimentRunner(config, progress=not args.quiet and args.out is not None)
    result: SweepResult = getattr(runner, method)()
    emit_csv(result.rows, args.out, columns)

    if not result.ok:
        logger.error(
            "%d of %d row(s) failed.",
            len(result.failures),
            len(result.failures) + len(result.rows),
        )
        return EXIT_PARTIAL_FAILURE
    return EXIT_OK


def cli() -> None:
    """CLI entry point."""
    args = parse_args()
    _configure_logging(verbose=args.verbose, quiet=args.quiet)
    sys.exit(main(args))


if __name__ == "__main__":
    cli()
