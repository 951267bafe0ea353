from typing import Awaitable, Callable

from langfuse import observe

from experiments.blockmap import run_blockmap
from experiments.checks import ExperimentOutcome
from experiments.config import ExperimentConfig
from experiments.fkt import run_fkt
from experiments.nfcheck import run_nfcheck
from experiments.scaling import run_scaling
from experiments.volumes import run_volumes

ExperimentFn = Callable[[ExperimentConfig, str, int, bool], Awaitable[ExperimentOutcome]]

_EXPERIMENTS: dict[str, ExperimentFn] = {
    "fkt": run_fkt,
    "nfcheck": run_nfcheck,
    "scaling": run_scaling,
    "volumes": run_volumes,
    "blockmap": run_blockmap,
}


@observe(name="experiment-dispatch", as_type="function")
def get_experiment(name: str) -> ExperimentFn:
    """
    Dispatches to the run function of a named experiment.

    Args:
        name (str): One of fkt, nfcheck, scaling, volumes, blockmap.

    Returns:
        The async run function, called as fn(config, out_dir, workers, dump_matrices).

    Raises:
        ValueError: If an unknown experiment name is provided.
    """
    try:
        return _EXPERIMENTS[name]
    except KeyError:
        raise ValueError(f"Unknown experiment: {name}") from None
