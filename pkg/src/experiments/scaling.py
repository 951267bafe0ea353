# src/experiments/scaling.py
"""Quasimode residual, gap and overlap over the hbar sweep."""
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from calculus.symbols import FourierSymbol
from core.errors import ResonantSiteError
from core.fitting import fit_loglog_slope
from core.workers import map_bounded
from experiments.checks import CheckLog, ExperimentOutcome
from experiments.config import ExperimentConfig
from geometry.hamiltonian import Hamiltonian
from normal_form.iteration import NormalFormResult, normal_form_iterate
from oracle.quasimodes import QuasimodeReport, build_quasimode, total_operator
from tools.save_tool import dump_matrix, write_csv

logger = logging.getLogger(__name__)

QUASIMODE_COLUMNS = ["hbar", "k", "E", "residual", "gap", "overlap", "nf_order"]


def site_for(momentum, hbar: float) -> tuple[int, ...]:
    """Lattice site k with hbar k closest to the momentum."""
    return tuple(int(round(p / hbar)) for p in momentum)


@dataclass
class SweepPoint:
    hbar: float
    H: Hamiltonian
    K0: FourierSymbol
    nf: NormalFormResult
    reports: dict[int, QuasimodeReport] = field(default_factory=dict)
    skipped: list[str] = field(default_factory=list)
    files: list[str] = field(default_factory=list)


def quasimode_point(
    config: ExperimentConfig,
    hbar: float,
    H: Hamiltonian | None = None,
    dump_dir: str | None = None,
) -> SweepPoint:
    """Normal form at one hbar and a quasimode report per configured momentum."""
    H = config.build_hamiltonian(hbar) if H is None else H
    K0 = config.build_perturbation(hbar)
    nf = normal_form_iterate(H, K0, config.N, config.M, config.band_limit)
    point = SweepPoint(hbar, H, K0, nf)
    for i, momentum in enumerate(config.site_momenta):
        k = site_for(momentum, hbar)
        try:
            M_total = total_operator(H, K0, config.basis_size, k)
            point.reports[i] = build_quasimode(H, K0, nf, k, config.basis_size, M_total)
        except ResonantSiteError as e:
            point.skipped.append(str(e))
            logger.info("skipping site %s at hbar=%s: %s", k, hbar, e)
            continue
        if dump_dir is not None:
            name = f"total_hbar{hbar:.6g}_k{'_'.join(str(v) for v in k)}"
            point.files.extend(dump_matrix(M_total, name, dump_dir))
    return point


def quasimode_checks(config: ExperimentConfig, points: list[SweepPoint], checks: CheckLog) -> dict:
    """Weyl bound at every point and the residual/overlap slope fits per site."""
    ctx = config.context(config.hbars[0])
    alpha, kappa, delta = ctx.alpha, ctx.kappa, ctx.delta
    fits = {}
    for p in points:
        for i, r in p.reports.items():
            checks.add(
                f"weyl_bound[hbar={p.hbar:.6g},k={list(r.k)}]",
                r.weyl_holds,
                "gap <= residual",
                gap=r.gap,
                residual=r.residual,
            )
    for i, momentum in enumerate(config.site_momenta):
        series = [(p.hbar, p.reports[i]) for p in points if i in p.reports]
        if len(series) < 2:
            continue
        hbars = [h for h, _ in series]
        residual_fit = fit_loglog_slope(hbars, [r.residual for _, r in series])
        target = kappa + alpha - 0.25
        checks.add(
            f"residual_slope[momentum={momentum}]",
            residual_fit.at_least(target),
            f"slope >= kappa + alpha - 0.25 = {target:.4g}",
            **residual_fit.to_dict(),
        )
        overlap_fit = fit_loglog_slope(hbars, [1.0 - r.overlap for _, r in series])
        if kappa > 1 + delta:
            target = kappa - 1 - delta - 0.25
            checks.add(
                f"overlap_slope[momentum={momentum}]",
                overlap_fit.at_least(target),
                f"slope >= kappa - 1 - delta - 0.25 = {target:.4g}",
                **overlap_fit.to_dict(),
            )
        fits[str(momentum)] = {"residual": residual_fit.to_dict(), "overlap_deviation": overlap_fit.to_dict()}
    return fits


def sorted_rows(points: list[SweepPoint]) -> list[dict]:
    rows = [r.row() for p in points for r in p.reports.values()]
    return sorted(rows, key=lambda row: (row["hbar"], row["k"]))


async def run_scaling(config: ExperimentConfig, out_dir: str, workers: int = 1, dump_matrices: bool = False) -> ExperimentOutcome:
    dump_dir = os.path.join(out_dir, "matrices") if dump_matrices else None
    points = await map_bounded(lambda h: quasimode_point(config, h, dump_dir=dump_dir), config.hbars, workers)
    checks = CheckLog()
    fits = quasimode_checks(config, points, checks)
    path = write_csv(sorted_rows(points), QUASIMODE_COLUMNS, "quasimodes.csv", out_dir)
    outcome = ExperimentOutcome("scaling", checks, [path] + [f for p in points for f in p.files])
    outcome.summary = {
        "alpha": config.context(config.hbars[0]).alpha,
        "N": config.N,
        "fits": fits,
        "skipped": [s for p in points for s in p.skipped],
        "reports": int(np.sum([len(p.reports) for p in points])),
    }
    return outcome
