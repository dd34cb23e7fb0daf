"""Command-line interface for pinchcheck."""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .commands import COMMANDS, run_command
from .config import YamabeChoice, build_run_config, load_environment, parse_float_list, parse_int_list, parse_resolutions
from .errors import MetricError, PinchcheckError, PreconditionError, SpecParseError, SymmetryError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_PRECONDITION = 3


def _argtype(parser):
    """Wrap a config parser so argparse reports its ValueError as a usage error."""
    def convert(text: str):
        try:
            return parser(text)
        except ValueError as e:
            raise argparse.ArgumentTypeError(str(e)) from None
    convert.__name__ = getattr(parser, "__name__", "value")
    return convert


def parse_args(args: Optional[List[str]] = None) -> argparse.Namespace:
    """
    Parse command line arguments.

    Args:
        args: Command line arguments (defaults to sys.argv[1:])

    Returns:
        argparse.Namespace: Parsed arguments
    """
    parser = argparse.ArgumentParser(
        description="Numerical curvature analysis and pinching-hypothesis checks",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter
    )

    parser.add_argument(
        "command",
        choices=list(COMMANDS),
        help="What to run"
    )

    # Env file options
    env_group = parser.add_argument_group("Environment options")
    env_group.add_argument(
        "--no-env-file",
        action="store_true",
        help="Disable automatic loading of .env file"
    )
    env_group.add_argument(
        "--env-file",
        type=str,
        default=".env",
        help="Path to the environment file"
    )

    geometry_group = parser.add_argument_group("Geometry and grid options")
    geometry_group.add_argument(
        "--spec",
        type=str,
        help="Path to the geometry spec file (analyze, check, verify)"
    )
    geometry_group.add_argument(
        "--resolution",
        type=_argtype(parse_resolutions),
        help="Resolution ladder N[,N...], strictly ascending; single-run commands use the finest"
    )
    geometry_group.add_argument(
        "--stencil-order",
        type=int,
        choices=(2, 4),
        help="Order of the central difference stencils"
    )

    check_group = parser.add_argument_group("Check options")
    check_group.add_argument(
        "--tolerance",
        type=float,
        help="Relative tolerance of identity residuals"
    )
    check_group.add_argument(
        "--margin",
        type=float,
        help="Safety margin required by strict hypothesis checks"
    )
    check_group.add_argument(
        "--yamabe",
        type=_argtype(YamabeChoice.parse),
        help="Yamabe value source: exact, trial or user:V"
    )
    check_group.add_argument(
        "--theta",
        type=_argtype(parse_float_list),
        help="Theta values for the theta-tensor identities"
    )

    sample_group = parser.add_argument_group("Sampling options")
    sample_group.add_argument(
        "--samples",
        type=int,
        help="Random samples per dimension"
    )
    sample_group.add_argument(
        "--seed",
        type=int,
        help="Root seed of the sample streams"
    )
    sample_group.add_argument(
        "--dim",
        type=_argtype(parse_int_list),
        help="Dimensions to sample, N[,N...]"
    )
    sample_group.add_argument(
        "--rho",
        type=float,
        help="Fixed rho for the sharp estimate (default: random in [-5, 5])"
    )

    output_group = parser.add_argument_group("Output options")
    output_group.add_argument(
        "-o", "--out",
        type=str,
        help="Path of the JSON report (default: print to stdout)"
    )
    output_group.add_argument(
        "-v", "--verbose",
        action="store_true",
        help="Log debug diagnostics"
    )
    output_group.add_argument(
        "-q", "--quiet",
        action="store_true",
        help="Log warnings and errors only"
    )

    return parser.parse_args(args)


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s",
                        force=True)


def main(args: Optional[List[str]] = None) -> int:
    """
    Main entry point for the CLI.

    Args:
        args: Command line arguments (defaults to sys.argv[1:])

    Returns:
        int: Exit code (0 all applicable checks pass, 1 a check is violated,
        2 usage or spec error, 3 numerical precondition failure)
    """
    try:
        parsed_args = parse_args(args)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    configure_logging(parsed_args.verbose, parsed_args.quiet)
    env = load_environment(parsed_args.env_file, not parsed_args.no_env_file)

    try:
        config = build_run_config(parsed_args, env)
        if config.command in ("analyze", "check", "verify") and config.geometry is None:
            raise ValueError(f"Command '{config.command}' needs a geometry spec (--spec PATH)")
    except SpecParseError as e:
        print(f"Error in spec file: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        report = run_command(config)
    except (PreconditionError, MetricError, SymmetryError) as e:
        print(f"Numerical precondition failed: {e}", file=sys.stderr)
        return EXIT_PRECONDITION
    except PinchcheckError as e:
        print(f"Error during {config.command}: {e}", file=sys.stderr)
        return EXIT_USAGE

    if config.out:
        output_file = report.save(Path(config.out))
        print(f"Report written to: {output_file}")
    else:
        sys.stdout.write(report.to_json())

    failed = report.failed
    for record in failed:
        print(f"Violated: {record.name} ({record.ref.value})", file=sys.stderr)
    return EXIT_VIOLATION if failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
