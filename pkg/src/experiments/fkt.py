# src/experiments/fkt.py
"""
Free-particle benchmark: H = |xi|^2, kappa = 2. The first eigenvalue
correction is hbar^2 times the torus average of K0, and what remains after
it should vanish faster than hbar^(2 + alpha).
"""
import logging

import numpy as np

from core.fitting import fit_loglog_slope
from core.workers import map_bounded
from experiments.checks import CheckLog, ExperimentOutcome
from experiments.config import ExperimentConfig
from experiments.scaling import QUASIMODE_COLUMNS, SweepPoint, quasimode_checks, quasimode_point
from geometry.hamiltonian import free
from tools.save_tool import write_csv

logger = logging.getLogger(__name__)

FKT_COLUMNS = QUASIMODE_COLUMNS + ["first_correction", "next_correction"]
AVERAGE_TOL = 1e-12


def fkt_point(config: ExperimentConfig, hbar: float) -> SweepPoint:
    H = free(config.context(hbar), mass_scale=2.0)
    return quasimode_point(config, hbar, H=H)


def correction_rows(point: SweepPoint) -> list[dict]:
    ctx = point.nf.ctx
    mean = point.K0.coefficient((0,) * ctx.d)
    rows = []
    for report in point.reports.values():
        xi = ctx.hbar * np.asarray(report.k, dtype=float)
        first = ctx.hbar**ctx.kappa * float(np.real(mean.evaluate(xi)))
        base = float(point.H.value(xi)[0])
        row = report.row()
        row["first_correction"] = first
        row["next_correction"] = abs(report.nearest - base - first)
        rows.append(row)
    return rows


def average_matches(point: SweepPoint) -> float:
    """Largest |A_0~(0, hbar k) - Re K0~(0, hbar k)| over the reported sites."""
    ctx = point.nf.ctx
    zero = (0,) * ctx.d
    A0 = point.nf.steps[0].A.coefficient(zero)
    mean = point.K0.coefficient(zero)
    worst = 0.0
    for report in point.reports.values():
        xi = ctx.hbar * np.asarray(report.k, dtype=float)
        worst = max(worst, abs(A0.evaluate(xi) - np.real(mean.evaluate(xi))))
    return worst


def indexed_rows(point: SweepPoint) -> list[tuple[int, dict]]:
    """Correction rows keyed by the index of the configured momentum."""
    return list(zip(point.reports.keys(), correction_rows(point)))


async def run_fkt(config: ExperimentConfig, out_dir: str, workers: int = 1, dump_matrices: bool = False) -> ExperimentOutcome:
    if config.kappa != 2.0:
        raise ValueError(f"fkt runs with kappa = 2, got kappa={config.kappa}")
    if config.N < 1:
        raise ValueError("fkt needs at least one normal form step (N >= 1)")
    points = await map_bounded(lambda h: fkt_point(config, h), config.hbars, workers)

    checks = CheckLog()
    fits = quasimode_checks(config, points, checks)
    for p in points:
        if p.reports:
            diff = average_matches(p)
            checks.add(
                f"first_correction[hbar={p.hbar:.6g}]",
                diff <= AVERAGE_TOL,
                f"A_0 average equals the torus average of K0 within {AVERAGE_TOL}",
                difference=diff,
            )

    rows = sorted((r for p in points for r in correction_rows(p)), key=lambda r: (r["hbar"], r["k"]))
    alpha = config.context(config.hbars[0]).alpha
    target = 2.0 + alpha - 0.25
    next_fits = {}
    for i, momentum in enumerate(config.site_momenta):
        series = [(p.hbar, row) for p in points for j, row in indexed_rows(p) if j == i]
        if len(series) < 2:
            continue
        fit = fit_loglog_slope([h for h, _ in series], [r["next_correction"] for _, r in series])
        next_fits[str(momentum)] = fit.to_dict()
        checks.add(
            f"next_correction_slope[momentum={momentum}]",
            fit.at_least(target),
            f"slope >= 2 + alpha - 0.25 = {target:.4g}",
            **fit.to_dict(),
        )

    path = write_csv(rows, FKT_COLUMNS, "fkt.csv", out_dir)
    outcome = ExperimentOutcome("fkt", checks, [path])
    outcome.summary = {
        "hamiltonian": "|xi|^2",
        "alpha": alpha,
        "fits": fits,
        "next_correction": next_fits,
        "skipped": [s for p in points for s in p.skipped],
    }
    return outcome
