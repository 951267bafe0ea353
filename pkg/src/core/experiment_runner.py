import logging

from langfuse import get_client, observe

from core.workers import resolve_workers
from experiments.checks import ExperimentOutcome
from experiments.config import ExperimentConfig
from experiments.dispatcher import get_experiment
from tools.save_tool import write_json

logger = logging.getLogger(__name__)


@observe
async def run_experiment(
    name: str,
    config: ExperimentConfig,
    out_dir: str,
    workers: int | None = None,
    dump_matrices: bool = False,
) -> ExperimentOutcome:
    """
    Runs one experiment and writes its summary.json next to the CSV output.

    Args:
        name (str): Experiment name (fkt, nfcheck, scaling, volumes, blockmap).
        config (ExperimentConfig): Validated configuration.
        out_dir (str): Output directory, created if missing.
        workers (int | None): Worker count; falls back to settings when None.
        dump_matrices (bool): Write oracle matrices as binary files where supported.

    Returns:
        ExperimentOutcome: Check results, written files and summary values.

    Raises:
        RuntimeError: If the experiment cannot be run to completion.
    """
    langfuse = get_client()
    run = get_experiment(name)
    try:
        n_workers = resolve_workers(workers if workers is not None else config.workers)
        logger.info("running %s with %d workers into %s", name, n_workers, out_dir)
        outcome = await run(config, out_dir, n_workers, dump_matrices)
        document = outcome.to_dict()
        document["config"] = config.model_dump(mode="json")
        document["seed"] = config.seed
        outcome.files.append(write_json(document, "summary.json", out_dir))
        langfuse.update_current_span(output={
            "experiment": name,
            "passed": outcome.passed,
            "failed_checks": outcome.checks.failed,
        })
        return outcome
    except Exception as e:
        error_message = f"Experiment {name} failed: {e}"
        langfuse.update_current_span(level="ERROR", status_message=error_message)
        raise RuntimeError(error_message) from e
