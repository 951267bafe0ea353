import argparse
import sys

from dotenv import load_dotenv
from langfuse import get_client, observe

from experiments.config import EXPERIMENTS, U64_MAX

load_dotenv()


def seed_validator(value: str) -> int:
    """
    Validates that the seed is an unsigned 64-bit integer.
    """
    try:
        ivalue = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("seed must be an integer.")
    if not 0 <= ivalue <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must be between 0 and 2**64 - 1.")
    return ivalue


def positive_int_validator(value: str) -> int:
    """
    Validates that a count argument is a positive integer.
    """
    try:
        ivalue = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("workers must be an integer.")
    if ivalue < 1:
        raise argparse.ArgumentTypeError("workers must be at least 1.")
    return ivalue


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config",
        default=None,
        help="Path to the JSON experiment configuration (defaults apply when omitted)"
    )
    parser.add_argument(
        "--out",
        required=True,
        help="Directory for CSV, JSON and matrix output"
    )
    parser.add_argument(
        "--seed",
        type=seed_validator,
        default=None,
        help="Unsigned 64-bit seed; overrides the configuration file"
    )
    parser.add_argument(
        "--workers",
        type=positive_int_validator,
        default=None,
        help="Parallel sweep workers; falls back to the config file, then SKAM_WORKERS"
    )
    parser.add_argument(
        "--dump-matrices",
        action="store_true",
        help="Write quantized total operators as binary files (scaling only)"
    )


@observe
def parse_args(argv: list[str] | None = None):
    """
    Parses command-line arguments for the experiment driver.

    One subcommand per experiment, each taking the same options. SystemExit
    from argparse is recorded on a Langfuse span before it propagates.
    """
    parser = argparse.ArgumentParser(
        prog="skam",
        description="Semiclassical KAM experiments: normal forms, quasimodes and resonance zones."
    )

    subparsers = parser.add_subparsers(dest="command", help="Available experiments")
    descriptions = {
        "fkt": "Free-particle eigenvalue corrections for H = |xi|^2.",
        "nfcheck": "Normal-form remainders and the conjugation identity.",
        "scaling": "Quasimode residual, gap and overlap over the hbar sweep.",
        "volumes": "Monte Carlo volumes of resonance zones and blocks.",
        "blockmap": "Block classification on a xi-grid and the geometric lemma.",
    }
    for name in EXPERIMENTS:
        _add_common_arguments(subparsers.add_parser(name, help=descriptions[name]))

    try:
        parsed_args = parser.parse_args(argv)
        if parsed_args.command is None:
            parser.print_help()
            sys.exit(1)
        return parsed_args
    except SystemExit as e:
        _langfuse_client = get_client()
        with _langfuse_client.start_as_current_span(name="argparse_error") as span:
            span.update(
                level="ERROR",
                status_message=f"Argparse failed due to invalid/missing arguments. Error: {e}",
                metadata={"argv": sys.argv if argv is None else argv}
            )
            _langfuse_client.update_current_trace(
                output={"status": "failed", "reason": "invalid_cli_arguments", "error": str(e)}
            )
        raise
