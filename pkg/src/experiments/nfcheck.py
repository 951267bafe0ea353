# src/experiments/nfcheck.py
"""Normal-form remainders per step and the conjugation defect on a truncated basis."""
import logging
from dataclasses import dataclass

import numpy as np

from calculus.serialization import normal_form_to_json
from calculus.symbols import add_symbols, is_self_adjoint
from core.errors import BasisTooSmallError
from core.fitting import fit_loglog_slope
from core.workers import map_bounded
from experiments.checks import CheckLog, ExperimentOutcome
from experiments.config import ExperimentConfig
from normal_form.iteration import SELF_ADJOINT_TOL, NormalFormResult, normal_form_iterate
from oracle.quantization import hermitian_exp, quantize
from tools.save_tool import write_csv, write_json

logger = logging.getLogger(__name__)

REMAINDER_COLUMNS = ["hbar", "step", "remainder_norm", "support_size"]
CONJUGATION_COLUMNS = ["hbar", "telescoping_norm", "unitary_deviation", "N"]


@dataclass
class ConjugationDefect:
    hbar: float
    telescoping_norm: float
    unitary_deviation: float
    N: int

    def row(self) -> dict:
        return {
            "hbar": self.hbar,
            "telescoping_norm": self.telescoping_norm,
            "unitary_deviation": self.unitary_deviation,
            "N": self.N,
        }


def conjugation_defect(nf: NormalFormResult, K_basis: int) -> ConjugationDefect:
    """
    Interior spectral norms of U T U^dagger - T_A and U - I, where
    T = quantize(H + hbar^kappa K0), T_A = quantize(H + hbar^kappa sum A_n)
    and U = U_{N-1} ... U_0. Every matrix shares the widest bandwidth so the
    interiors coincide.
    """
    ctx = nf.ctx
    hk = ctx.hbar**ctx.kappa
    averaged = nf.effective_average
    bandwidth = max([nf.K0.radius, averaged.radius] + [P.radius for P in nf.generators])
    total = quantize(add_symbols([(1.0, nf.H.symbol), (hk, nf.K0)]), K_basis, bandwidth=bandwidth)
    target = quantize(add_symbols([(1.0, nf.H.symbol), (hk, averaged)]), K_basis, bandwidth=bandwidth)
    if total.interior.size == 0:
        raise BasisTooSmallError(
            f"K_basis={K_basis} leaves no interior modes at bandwidth {bandwidth} and margin {total.margin}"
        )
    U = np.eye(total.size, dtype=complex)
    for P in nf.generators:
        if not P.coeffs:
            continue
        U = hermitian_exp(quantize(P, K_basis).matrix, nf.scale) @ U
    conjugated = U @ total.matrix @ U.conj().T
    telescoping = float(np.linalg.norm(total.interior_block(conjugated - target.matrix), 2))
    deviation = float(np.linalg.norm(total.interior_block(U - np.eye(total.size)), 2))
    return ConjugationDefect(ctx.hbar, telescoping, deviation, nf.N)


@dataclass
class NormalFormPoint:
    hbar: float
    nf: NormalFormResult
    defect: ConjugationDefect
    self_adjoint: list[bool]


def nfcheck_point(config: ExperimentConfig, hbar: float) -> NormalFormPoint:
    H = config.build_hamiltonian(hbar)
    K0 = config.build_perturbation(hbar)
    nf = normal_form_iterate(H, K0, config.N, config.M, config.band_limit)
    flags = []
    for step in nf.steps:
        flags.extend(is_self_adjoint(S, SELF_ADJOINT_TOL) for S in (step.P, step.A, step.K_next))
    return NormalFormPoint(hbar, nf, conjugation_defect(nf, config.basis_size), flags)


async def run_nfcheck(config: ExperimentConfig, out_dir: str, workers: int = 1, dump_matrices: bool = False) -> ExperimentOutcome:
    points = await map_bounded(lambda h: nfcheck_point(config, h), config.hbars, workers)
    ctx = config.context(config.hbars[0])
    alpha, kappa, delta = ctx.alpha, ctx.kappa, ctx.delta
    checks = CheckLog()
    files = []

    remainder_rows = sorted(
        (d.row(p.hbar) for p in points for d in p.nf.diagnostics),
        key=lambda r: (r["hbar"], r["step"]),
    )
    files.append(write_csv(remainder_rows, REMAINDER_COLUMNS, "remainders.csv", out_dir))
    defect_rows = sorted((p.defect.row() for p in points), key=lambda r: r["hbar"])
    files.append(write_csv(defect_rows, CONJUGATION_COLUMNS, "conjugation.csv", out_dir))
    for p in points:
        files.append(write_json(normal_form_to_json(p.nf, include_symbols=False), f"normal_form_hbar{p.hbar:.6g}.json", out_dir))
        checks.add(
            f"self_adjoint[hbar={p.hbar:.6g}]",
            all(p.self_adjoint),
            "P_n, A_n and K_{n+1} self-adjoint",
            flags=p.self_adjoint,
        )

    hbars = [p.hbar for p in points]
    fits: dict = {"remainders": {}}
    if len(points) >= 2:
        for n in range(config.N):
            fit = fit_loglog_slope(hbars, [p.nf.diagnostics[n].remainder_norm for p in points])
            target = (n + 1) * alpha - 0.25
            fits["remainders"][str(n)] = fit.to_dict()
            checks.add(
                f"remainder_slope[step={n}]",
                fit.at_least(target),
                f"slope >= (n+1)*alpha - 0.25 = {target:.4g}",
                **fit.to_dict(),
            )
        fit = fit_loglog_slope(hbars, [p.defect.telescoping_norm for p in points])
        target = kappa + config.N * alpha - 0.3
        fits["telescoping"] = fit.to_dict()
        checks.add(
            "telescoping_slope",
            fit.at_least(target),
            f"slope >= kappa + N*alpha - 0.3 = {target:.4g}",
            **fit.to_dict(),
        )
        fit = fit_loglog_slope(hbars, [p.defect.unitary_deviation for p in points])
        fits["unitary_deviation"] = fit.to_dict()
        # U - I is O(hbar^(kappa-1-delta)) and only small when that exponent is positive
        if kappa > 1 + delta:
            target = kappa - 1 - delta - 0.25
            checks.add(
                "unitary_deviation_slope",
                fit.at_least(target),
                f"slope >= kappa - 1 - delta - 0.25 = {target:.4g}",
                **fit.to_dict(),
            )

    if not config.build_perturbation(config.hbars[0]).coeffs:
        worst = max([r["remainder_norm"] for r in remainder_rows] + [r["telescoping_norm"] for r in defect_rows], default=0.0)
        checks.add("zero_perturbation", worst == 0.0, "K0 = 0 gives zero remainders", max_norm=worst)

    outcome = ExperimentOutcome("nfcheck", checks, files)
    outcome.summary = {"alpha": alpha, "N": config.N, "M": config.M, "band_limit": config.band_limit, "fits": fits}
    return outcome
