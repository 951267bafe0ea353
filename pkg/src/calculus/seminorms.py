# src/calculus/seminorms.py
"""Grid estimates of symbol-class seminorms and their certification over hbar sweeps."""
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

from calculus.grids import SampleGrid, standard_grid
from calculus.symbols import FourierSymbol, multi_indices, symbol_sup_norm, x_derivative, xi_derivative
from core.fitting import SlopeFit, fit_loglog_slope

logger = logging.getLogger(__name__)

Index = tuple[int, ...]
BOUNDED_SLOPE = -0.25


@dataclass
class SeminormReport:
    """sup |d_x^alpha d_xi^beta P| on the grid and the constants C = sup / hbar^(m - delta |beta|)."""

    m: float
    delta: float
    hbar: float
    sups: dict[tuple[Index, Index], float] = field(default_factory=dict)
    constants: dict[tuple[Index, Index], float] = field(default_factory=dict)

    def rows(self) -> list[dict]:
        return [
            {"alpha": list(a), "beta": list(b), "sup": self.sups[(a, b)], "constant": self.constants[(a, b)]}
            for a, b in sorted(self.sups)
        ]


def _indices_up_to(d: int, order: int) -> list[Index]:
    return [a for j in range(order + 1) for a in multi_indices(d, j)]


def seminorm_estimate(
    P: FourierSymbol,
    max_order: int,
    grid: SampleGrid | None = None,
    m: float = 0.0,
) -> SeminormReport:
    ctx = P.ctx
    grid = grid or standard_grid(ctx.d)
    report = SeminormReport(m, ctx.delta, ctx.hbar)
    indices = _indices_up_to(ctx.d, max_order)
    for beta in indices:
        Q = xi_derivative(P, beta)
        for alpha in indices:
            value = symbol_sup_norm(x_derivative(Q, alpha), grid)
            report.sups[(alpha, beta)] = value
            report.constants[(alpha, beta)] = value / ctx.hbar ** (m - ctx.delta * sum(beta))
    return report


@dataclass
class ClassCertificate:
    m: float
    hbars: list[float]
    fits: dict[tuple[Index, Index], SlopeFit]
    bounded: bool

    def failures(self) -> list[tuple[Index, Index]]:
        return [key for key, fit in self.fits.items() if not fit.at_least(BOUNDED_SLOPE)]


def certify_symbol_class(
    build: Callable[[float], FourierSymbol],
    hbars: Sequence[float],
    m: float,
    max_order: int = 1,
) -> ClassCertificate:
    """
    Fit log C_{alpha,beta} against log hbar over the sweep; the family counts as
    bounded in its class when no constant grows faster than hbar^-0.25.
    """
    reports = [seminorm_estimate(build(h), max_order, m=m) for h in hbars]
    fits = {}
    for key in reports[0].constants:
        fits[key] = fit_loglog_slope(hbars, [r.constants[key] for r in reports])
    cert = ClassCertificate(m, list(hbars), fits, True)
    cert.bounded = not cert.failures()
    if not cert.bounded:
        logger.info("class m=%s not certified for %s", m, cert.failures())
    return cert


def operator_norm_bound(P: FourierSymbol, grid: SampleGrid | None = None) -> float:
    """max over |alpha| <= d+1 of sup |d_x^alpha P|, which bounds ||quantize(P)|| up to a dimensional constant."""
    grid = grid or standard_grid(P.ctx.d)
    return max(
        symbol_sup_norm(x_derivative(P, alpha), grid) for alpha in _indices_up_to(P.ctx.d, P.ctx.d + 1)
    )
