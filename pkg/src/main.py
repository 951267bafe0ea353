import asyncio
import logging
import os
import sys

from dotenv import load_dotenv
from langfuse import get_client

from cli import parse_args
from core.experiment_runner import run_experiment
from tools.config_reader import load_config

load_dotenv()

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_ERROR = 2


async def async_main(argv: list[str] | None = None) -> int:
    """
    Runs one experiment from the command line and returns the exit code.

    0 when every check passed, 1 when a check failed, 2 when the run itself
    failed (invalid configuration, support overflow, basis too small, ...).
    """
    langfuse = get_client()
    logging.basicConfig(level=os.getenv("SKAM_LOG_LEVEL", "WARNING"))

    with langfuse.start_as_current_span(name="app_run") as app_span:
        args = parse_args(argv)
        filtered_args = vars(args).copy()
        command = filtered_args.pop("command")
        app_span.update_trace(input={"experiment": command, **filtered_args})

        try:
            config = load_config(args.config, seed=args.seed)
            outcome = await run_experiment(command, config, args.out, args.workers, args.dump_matrices)
            status = "success" if outcome.passed else "checks_failed"
            for check in outcome.checks.checks:
                print(f"[{'PASS' if check.passed else 'FAIL'}] {check.name}: {check.expected}")
            message = f"{command}: {len(outcome.checks.checks) - len(outcome.checks.failed)}/{len(outcome.checks.checks)} checks passed, output in {args.out}"
            print(message)
            app_span.update(output={"status": status, "message": message, "failed_checks": outcome.checks.failed})
            app_span.update_trace(output={"status": status, "message": message})
            code = EXIT_OK if outcome.passed else EXIT_CHECKS_FAILED
        except RuntimeError as e:
            print(f"Error: {e}")
            app_span.update(level="ERROR", status_message=str(e))
            app_span.update_trace(output={"status": "failed", "error": str(e)})
            code = EXIT_ERROR

    langfuse.flush()
    return code


def main(argv: list[str] | None = None):
    """
    Synchronous entry point for the command-line interface.
    It runs the async_main coroutine using asyncio and exits with its code.
    """
    sys.exit(asyncio.run(async_main(argv)))


if __name__ == "__main__":
    main()
