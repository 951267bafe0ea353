# src/oracle/quasimodes.py
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from langfuse import get_client, observe

from calculus.symbols import FourierSymbol, add_symbols
from core.errors import BasisTooSmallError
from geometry.hamiltonian import Hamiltonian
from normal_form.iteration import NormalFormResult, effective_eigenvalue
from oracle.quantization import OperatorMatrix, eigensolve, hermitian_exp, quantize

logger = logging.getLogger(__name__)

WEYL_SLACK = 1e-10


@dataclass
class QuasimodeReport:
    """Quasi-eigenpair (E, phi) at a lattice site, measured against the oracle spectrum."""

    hbar: float
    k: tuple[int, ...]
    E: float
    residual: float
    gap: float
    overlap: float
    nf_order: int
    nearest: float = float("nan")

    def __post_init__(self):
        if not 0.0 <= self.overlap <= 1.0 + 1e-12:
            raise ValueError(f"Overlap {self.overlap} outside [0, 1]")

    @property
    def weyl_holds(self) -> bool:
        """gap <= residual up to the eigensolve slack."""
        return self.gap <= self.residual + WEYL_SLACK

    def row(self) -> dict:
        return {
            "hbar": self.hbar,
            "k": " ".join(str(v) for v in self.k),
            "E": self.E,
            "residual": self.residual,
            "gap": self.gap,
            "overlap": self.overlap,
            "nf_order": self.nf_order,
        }


def total_operator(H: Hamiltonian, K0: FourierSymbol, K_basis: int, center: Sequence[int] | None = None) -> OperatorMatrix:
    """quantize(H + hbar^kappa K0)."""
    ctx = H.ctx
    total = add_symbols([(1.0, H.symbol), (ctx.hbar**ctx.kappa, K0)])
    out = quantize(total, K_basis, center)
    out.name = "total"
    return out


def conjugated_site(nf: NormalFormResult, site: OperatorMatrix, k: Sequence[int]) -> np.ndarray:
    """U_0^dagger ... U_{N-1}^dagger e_k, U_n = exp(i s quantize(P_n)) with s the normal-form scale."""
    phi = site.basis_vector(k)
    for P in reversed(nf.generators):
        Pm = quantize(P, site.K_basis, site.center).matrix
        phi = hermitian_exp(Pm, -nf.scale) @ phi
    return phi


@observe(capture_input=False, capture_output=False)
def build_quasimode(
    H: Hamiltonian,
    K0: FourierSymbol,
    nf: NormalFormResult,
    k: Sequence[int],
    K_basis: int,
    M_total: OperatorMatrix | None = None,
) -> QuasimodeReport:
    """
    Quasimode phi = U^dagger e_k on a window centred at the site, with E from
    the normal form; residual, gap and overlap are measured on quantize(H + hbar^kappa K0).
    The site must sit N * bandwidth * M modes inside the window, with the
    bandwidth of the measured operator.
    """
    ctx = nf.ctx
    site = tuple(int(v) for v in k)
    E = effective_eigenvalue(nf, site)
    reach = max(nf.N, 1) * max(K0.radius, 1) * nf.M
    if K_basis < reach:
        raise BasisTooSmallError(
            f"Site {site} is {K_basis} modes from the basis boundary; at least N*bandwidth*M = {reach} needed"
        )
    M_total = M_total or total_operator(H, K0, K_basis, site)
    phi = conjugated_site(nf, M_total, site)
    phi = phi / np.linalg.norm(phi)
    residual = float(np.linalg.norm(M_total.matrix @ phi - E * phi))
    nearest, gap = eigensolve(M_total).nearest(E)
    overlap = float(min(1.0, abs(phi[M_total.index[site]])))
    report = QuasimodeReport(ctx.hbar, site, E, residual, gap, overlap, nf.N, nearest)
    if not report.weyl_holds:
        logger.warning("spectral gap %.3e exceeds quasimode residual %.3e at k=%s", gap, residual, site)
    logger.debug("quasimode k=%s hbar=%s residual=%.3e gap=%.3e", site, ctx.hbar, residual, gap)
    get_client().update_current_span(output={"hbar": ctx.hbar, "k": list(site), "residual": residual})
    return report
