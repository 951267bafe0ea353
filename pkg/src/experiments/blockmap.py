# src/experiments/blockmap.py
"""Block labels on a regular grid and a sampled check of the geometric lemma."""
import logging
from dataclasses import dataclass, field

import numpy as np

from core.workers import map_bounded
from experiments.checks import CheckLog, ExperimentOutcome
from experiments.config import ExperimentConfig
from geometry.hamiltonian import Hamiltonian
from geometry.volumes import BoxWindow
from geometry.zones import block_table, check_geometric_lemma, containing_block
from tools.save_tool import write_csv

logger = logging.getLogger(__name__)


def grid_points(window: BoxWindow, points_per_axis: int) -> np.ndarray:
    """points_per_axis**d grid over the box, first axis slowest."""
    axes = [np.linspace(c - window.half_width, c + window.half_width, points_per_axis) for c in window.center]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass
class BlockMap:
    hbar: float
    rows: list[dict]
    fractions: list[float]
    uncovered: int
    lemma_requested: int = 0
    lemma_draws: int = 0
    lemma_points: int = 0
    lemma_violations: int = 0
    lemma_examples: list[dict] = field(default_factory=list)

    def record_lemma(self, xi: np.ndarray, H: Hamiltonian) -> None:
        """Check the lemma at xi if it lies in a block of dimension below d."""
        R = containing_block(xi, H)
        if R is None:
            self.uncovered += 1
            return
        if R.dim >= H.ctx.d:
            return
        report = check_geometric_lemma(xi, R, H)
        self.lemma_points += 1
        if not report.holds:
            self.lemma_violations += len(report.violations)
            if len(self.lemma_examples) < 5:
                self.lemma_examples.append({"xi": list(report.xi), "lattice": report.lattice, "violations": len(report.violations)})


def block_map(H: Hamiltonian, points: np.ndarray, lemma_points: np.ndarray | None = None) -> BlockMap:
    ctx = H.ctx
    table = block_table(points, H)
    labels = np.where(table.any(axis=1), np.argmax(table, axis=1), -1)
    counts = table.sum(axis=1)
    rows = []
    for xi, label, count in zip(points, labels, counts):
        row = {f"xi_{i}": float(v) for i, v in enumerate(xi)}
        row.update({"hbar": ctx.hbar, "block": int(label), "blocks": int(count)})
        rows.append(row)
    result = BlockMap(
        hbar=ctx.hbar,
        rows=rows,
        fractions=[float(f) for f in table.mean(axis=0)],
        uncovered=int(np.count_nonzero(counts == 0)),
    )
    for xi in lemma_points if lemma_points is not None else ():
        result.lemma_draws += 1
        result.record_lemma(xi, H)
    return result


def sample_lemma(
    result: BlockMap,
    H: Hamiltonian,
    window: BoxWindow,
    rng: np.random.Generator,
    count: int,
    max_draws: int | None = None,
) -> BlockMap:
    """
    Draw points from the window until count of them lie in blocks of dimension
    below d, or until max_draws (default 20 * count) points have been drawn.
    """
    max_draws = 20 * count if max_draws is None else max_draws
    result.lemma_requested += count
    target = result.lemma_points + count
    draws = 0
    while result.lemma_points < target and draws < max_draws:
        batch = min(target - result.lemma_points, max_draws - draws)
        for xi in window.sample(rng, batch):
            result.record_lemma(xi, H)
        draws += batch
    result.lemma_draws += draws
    if result.lemma_points < target:
        logger.warning(
            "only %d of %d lemma points found in lower blocks after %d draws at hbar=%s",
            result.lemma_points, target, draws, H.ctx.hbar,
        )
    return result


def blockmap_point(config: ExperimentConfig, hbar: float, points: np.ndarray, window: BoxWindow, seed) -> BlockMap:
    H = config.build_hamiltonian(hbar)
    result = sample_lemma(block_map(H, points), H, window, np.random.default_rng(seed), config.lemma_samples)
    logger.info(
        "block map at hbar=%s: fractions %s, %d lemma points in %d draws, %d violations",
        hbar, result.fractions, result.lemma_points, result.lemma_draws, result.lemma_violations,
    )
    return result


async def run_blockmap(config: ExperimentConfig, out_dir: str, workers: int = 1, dump_matrices: bool = False) -> ExperimentOutcome:
    window = config.window.build(config.d)
    if not isinstance(window, BoxWindow):
        raise ValueError("blockmap needs a box window")
    points = grid_points(window, config.grid_points)
    streams = np.random.SeedSequence(config.seed).spawn(len(config.hbars))
    maps: list[BlockMap] = await map_bounded(
        lambda job: blockmap_point(config, job[0], points, window, job[1]),
        list(zip(config.hbars, streams)),
        workers,
    )

    checks = CheckLog()
    for m in maps:
        checks.add(
            f"covering[hbar={m.hbar:.6g}]",
            m.uncovered == 0 and sum(m.fractions) >= 1.0,
            "every point lies in some block; block fractions sum to >= 1",
            uncovered=m.uncovered,
            fraction_sum=sum(m.fractions),
        )
        checks.add(
            f"geometric_lemma[hbar={m.hbar:.6g}]",
            m.lemma_violations == 0,
            "no k outside R with |Omega_k|/|k| < hbar^delta inside B_R",
            points=m.lemma_points,
            violations=m.lemma_violations,
            examples=m.lemma_examples,
        )

    columns = ["hbar"] + [f"xi_{i}" for i in range(config.d)] + ["block", "blocks"]
    rows = sorted((r for m in maps for r in m.rows), key=lambda r: tuple(r[c] for c in columns))
    path = write_csv(rows, columns, "blockmap.csv", out_dir)
    outcome = ExperimentOutcome("blockmap", checks, [path])
    outcome.summary = {
        "window": window.describe(),
        "grid_points": config.grid_points,
        "fractions": {f"{m.hbar:.17g}": m.fractions for m in maps},
        "lemma": {
            f"{m.hbar:.17g}": {"requested": m.lemma_requested, "evaluated": m.lemma_points, "draws": m.lemma_draws}
            for m in maps
        },
    }
    return outcome
