"""Module for interacting with the lattice toolkit from the CLI."""

import argparse
import dataclasses
import logging
import os
import pathlib

from . import dissipation, eigenstates, spectrum, validate
from .core.config import RunConfig, ScanSettings, load_config
from .core.exceptions import (
    ConfigError,
    ConfigNotFoundError,
    InvalidConfigError,
    SkinburstError,
)
from .core.spectral import Limit, Selection, SpectralTag
from .output import RunOutput, report_error

logger = logging.getLogger(__name__)

SKINBURST_THREADS = "SKINBURST_THREADS"

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def int_list(value: str) -> list[int]:
    """Parse a comma separated list of integers."""
    try:
        return [int(item) for item in value.split(",") if item]
    except ValueError as error:
        msg = f"'{value}' is not a comma separated list of integers."
        raise argparse.ArgumentTypeError(msg) from error


def selection_list(value: str) -> list[Selection]:
    """Parse a comma separated list of selection rules."""
    try:
        return [Selection(item) for item in value.split(",") if item]
    except ValueError as error:
        choices = ", ".join(Selection)
        msg = f"'{value}' contains an unknown rule, choose from {choices}."
        raise argparse.ArgumentTypeError(msg) from error


def _add_common(parser: argparse.ArgumentParser, config: bool = True) -> None:
    if config:
        parser.add_argument(
            "-c",
            "--config",
            type=pathlib.Path,
            required=True,
            help="TOML file with [lattice], [dynamics] and [scan] blocks.",
        )
    parser.add_argument(
        "-o",
        "--out",
        type=pathlib.Path,
        default=pathlib.Path("output"),
        help="Directory receiving CSV files, plot scripts and the manifest.",
    )


def parse(args: list[str]) -> argparse.Namespace:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        prog="python -m skinburst",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )

    action = parser.add_subparsers(
        dest="action", help="Available actions.", required=True
    )

    spectrum_parser = action.add_parser(
        "spectrum", help="Diagonalize the ring and export its complex spectrum."
    )
    _add_common(spectrum_parser)
    spectrum_parser.add_argument(
        "-l",
        "--limit",
        type=Limit,
        choices=list(Limit),
        help="Also export an analytic limit spectrum.",
    )
    spectrum_parser.add_argument(
        "--classify",
        action="store_true",
        help="Tag eigenvalues as left loop, right loop or detached.",
    )
    spectrum_parser.add_argument(
        "-p",
        "--precision",
        type=int,
        help="Diagonalize in extended precision with this many decimal digits.",
    )
    spectrum_parser.add_argument(
        "--sizes",
        type=int_list,
        default=[],
        help="Comma separated ring sizes of a finite-size sweep.",
    )
    spectrum_parser.add_argument(
        "--dump-hamiltonian",
        action="store_true",
        help="Also export the Hamiltonian in both bases as element triplets.",
    )

    eigenstates_parser = action.add_parser(
        "eigenstates", help="Export eigenstate profiles and Lyapunov exponents."
    )
    _add_common(eigenstates_parser)
    eigenstates_parser.add_argument(
        "-s",
        "--select",
        type=selection_list,
        default=[Selection.MAX_IM],
        help="Comma separated rules picking eigenstates on a loop.",
    )
    eigenstates_parser.add_argument(
        "--loop",
        type=SpectralTag,
        choices=[SpectralTag.LEFT_LOOP, SpectralTag.RIGHT_LOOP],
        default=SpectralTag.RIGHT_LOOP,
        help="Loop the eigenstates are taken from.",
    )
    eigenstates_parser.add_argument(
        "--sizes",
        type=int_list,
        default=[],
        help="Comma separated ring sizes for the collapse comparison.",
    )

    dynamics_parser = action.add_parser(
        "dynamics", help="Propagate a lossy walker and export dissipation."
    )
    _add_common(dynamics_parser)
    dynamics_parser.add_argument(
        "-n", "--n0", type=int, help="Initial cell of the walker."
    )
    dynamics_parser.add_argument(
        "--scan",
        type=str,
        nargs="?",
        const="",
        help="Scan ln eta, over 'min:max:steps' when given as '--scan=-3:3:61' "
        "and over the configured [scan] grid otherwise.",
    )
    dynamics_parser.add_argument(
        "--sites",
        type=int_list,
        help="Comma separated cells analysed in a scan.",
    )
    dynamics_parser.add_argument(
        "--strict",
        action="store_true",
        help="Fail when survival stays above the stop threshold.",
    )

    validate_parser = action.add_parser(
        "validate", help="Run the reproduction checks."
    )
    _add_common(validate_parser, config=False)
    validate_parser.add_argument(
        "--suite",
        type=validate.Suite,
        choices=list(validate.Suite),
        default=validate.Suite.QUICK,
        help="Quick checks or the full suite including dynamics scans.",
    )

    return parser.parse_args(args)


def resolve_workers() -> int:
    """Return the worker count capped by SKINBURST_THREADS, 0 meaning all CPUs."""
    value = os.getenv(SKINBURST_THREADS, "").strip()
    if value in {"", "0"}:
        return os.cpu_count() or 1
    try:
        workers = int(value)
    except ValueError as error:
        msg = f"The environment variable '{SKINBURST_THREADS}' is not an integer."
        raise InvalidConfigError(msg) from error
    if workers < 0:
        msg = f"The environment variable '{SKINBURST_THREADS}' must be nonnegative."
        raise InvalidConfigError(msg)
    return workers


def with_overrides(run: RunConfig, args: argparse.Namespace) -> RunConfig:
    """Apply command line flags over the file configuration."""
    scan = run.scan
    if getattr(args, "scan", None):
        scan = ScanSettings.from_spec(args.scan, scan.sites)
    if getattr(args, "sites", None):
        scan = dataclasses.replace(scan, sites=tuple(args.sites))
    n0 = getattr(args, "n0", None)
    return dataclasses.replace(run, n0=run.n0 if n0 is None else n0, scan=scan)


def run_action(args: argparse.Namespace) -> int:
    """Run one subcommand and write its manifest."""
    out = RunOutput(args.out, args.action)
    if args.action == "validate":
        passed = validate.validate(out, args.suite, resolve_workers())
        out.finish({"suite": str(args.suite)})
        return EXIT_OK if passed else EXIT_VALIDATION

    run = with_overrides(load_config(args.config), args)
    if args.action == "spectrum":
        spectrum.spectrum(
            run,
            out,
            limit=args.limit,
            classify=args.classify,
            precision=args.precision,
            sizes=args.sizes,
            dump_hamiltonian=args.dump_hamiltonian,
        )
    elif args.action == "eigenstates":
        eigenstates.eigenstates(
            run, out, selections=args.select, sizes=args.sizes, tag=args.loop
        )
    elif args.action == "dynamics":
        n0 = dissipation.require_n0(run, args.n0)
        if args.scan is not None:
            dissipation.scan(run, out, n0=n0, workers=resolve_workers())
        else:
            dissipation.dissipation(run, out, n0=n0, strict=args.strict)
    out.finish(run.snapshot())
    return EXIT_OK


def main(args: argparse.Namespace) -> int:
    """Run the requested action and map failures to exit codes."""
    try:
        return run_action(args)
    except (ConfigError, ConfigNotFoundError) as error:
        logger.error("Configuration rejected: %s", error)  # noqa: TRY400
        report_error(error, args.out)
        return EXIT_CONFIG
    except SkinburstError as error:
        logger.error("Computation failed: %s", error)  # noqa: TRY400
        report_error(error, args.out)
        return EXIT_NUMERICAL
    except Exception as error:
        logger.exception("Unexpected failure.")
        report_error(error, args.out)
        return EXIT_NUMERICAL
