# src/normal_form/iteration.py
"""
Finite-order quasi-resonant normal form.

Each step solves the self-adjoint homological equation for the current
remainder, conjugates H + hbar^kappa (sum A_j + K_n) by exp(i s P_n) through a
truncated commutator series, and keeps what is left as the next remainder.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from langfuse import get_client, observe

from averaging.homological import selfadjoint_homological
from calculus.symbols import (
    FourierSymbol,
    _shared_ctx,
    add_symbols,
    commutator,
    is_self_adjoint,
    symbol_sup_norm,
    zero_symbol,
)
from core.context import SemiclassicalContext
from core.errors import NotSelfAdjointError, ResonantSiteError, SupportOverflowError
from geometry.hamiltonian import Hamiltonian
from geometry.lattices import euclidean_norm
from geometry.zones import in_zone, zone_lattices

logger = logging.getLogger(__name__)

SELF_ADJOINT_TOL = 1e-10


def band_limit_symbol(P: FourierSymbol, band: int | None) -> FourierSymbol:
    """Drop modes with |k|_inf > band."""
    if band is None or P.radius <= band:
        return P
    kept = {k: f for k, f in P.coeffs.items() if max(abs(v) for v in k) <= band}
    logger.debug("band limit %d dropped %d modes", band, len(P.coeffs) - len(kept))
    return FourierSymbol(P.ctx, kept)


def conjugate_expand(
    P: FourierSymbol,
    B: FourierSymbol,
    scale: float,
    M: int,
    cap: int | None = None,
    band_limit: int | None = None,
) -> FourierSymbol:
    """sum_{n=0}^{M} (i scale)^n / n! ad_P^n(B), each commutator exact and pruned."""
    if M < 1:
        raise ValueError(f"Commutator series needs M >= 1, got {M}")
    terms = [(1.0, B)]
    term = B
    for n in range(1, M + 1):
        try:
            term = commutator(P, term, cap)
        except SupportOverflowError as e:
            raise SupportOverflowError(e.radius, e.cap, f"commutator term {n} of {M}") from e
        term = band_limit_symbol(term, band_limit)
        if not term.coeffs:
            break
        terms.append(((1j * scale) ** n / math.factorial(n), term))
    return add_symbols(terms)


@dataclass
class NormalFormStep:
    P: FourierSymbol
    A: FourierSymbol
    K_next: FourierSymbol


@dataclass
class StepDiagnostics:
    step: int
    remainder_norm: float
    generator_norm: float
    support_size: int
    support_radius: int

    def row(self, hbar: float) -> dict:
        return {
            "hbar": hbar,
            "step": self.step,
            "remainder_norm": self.remainder_norm,
            "support_size": self.support_size,
        }


@dataclass
class NormalFormResult:
    ctx: SemiclassicalContext
    H: Hamiltonian
    K0: FourierSymbol
    N: int
    M: int
    scale: float
    steps: list[NormalFormStep] = field(default_factory=list)
    diagnostics: list[StepDiagnostics] = field(default_factory=list)
    band_limit: int | None = None

    @property
    def effective_average(self) -> FourierSymbol:
        """A = sum_{n<N} A_n."""
        if not self.steps:
            return zero_symbol(self.ctx)
        return add_symbols([(1.0, s.A) for s in self.steps])

    @property
    def generators(self) -> list[FourierSymbol]:
        return [s.P for s in self.steps]

    @property
    def remainder(self) -> FourierSymbol:
        return self.steps[-1].K_next if self.steps else self.K0


@observe(capture_input=False, capture_output=False)
def normal_form_iterate(
    H: Hamiltonian,
    K0: FourierSymbol,
    N: int = 3,
    M: int = 6,
    band_limit: int | None = None,
    cap: int | None = None,
) -> NormalFormResult:
    """
    Runs N conjugation steps. With left quantization the homological solution
    removes the non-averaged part under exp(-i hbar^(kappa-1) P_n), so the
    conjugation scale is -hbar^(kappa-1).
    """
    ctx = _shared_ctx(H.symbol, K0)
    if N < 0:
        raise ValueError(f"Normal form order must be nonnegative, got {N}")
    if not is_self_adjoint(K0, SELF_ADJOINT_TOL):
        raise NotSelfAdjointError("Perturbation K0 is not self-adjoint")
    bound = ctx.resonance_bound
    for k in K0.support:
        if euclidean_norm(k) > bound * (1 + 1e-12):
            raise ValueError(f"Perturbation mode {k} exceeds |k| <= hbar^-gamma = {bound:.6g}")

    hk = ctx.hbar**ctx.kappa
    s = -(ctx.hbar ** (ctx.kappa - 1.0))
    result = NormalFormResult(ctx, H, K0, N, M, s, band_limit=band_limit)
    Hsym = H.symbol
    averaged = zero_symbol(ctx)
    K = K0
    for n in range(N):
        P, A = selfadjoint_homological(K, H)
        B = add_symbols([(1.0, Hsym), (hk, averaged), (hk, K)])
        try:
            C = conjugate_expand(P, B, s, M, cap, band_limit)
        except SupportOverflowError as e:
            raise SupportOverflowError(e.radius, e.cap, f"normal form step {n}, {e.step}") from e
        averaged = add_symbols([(1.0, averaged), (1.0, A)])
        K = add_symbols([(1.0 / hk, C), (-1.0 / hk, Hsym), (-1.0, averaged)])
        K = band_limit_symbol(K, band_limit)
        result.steps.append(NormalFormStep(P, A, K))
        diag = StepDiagnostics(
            step=n,
            remainder_norm=symbol_sup_norm(K),
            generator_norm=symbol_sup_norm(P),
            support_size=len(K.support),
            support_radius=K.radius,
        )
        result.diagnostics.append(diag)
        logger.info(
            "step %d at hbar=%s: |K|=%.3e, support %d (radius %d)",
            n, ctx.hbar, diag.remainder_norm, diag.support_size, diag.support_radius,
        )
    get_client().update_current_span(
        output={"hbar": ctx.hbar, "remainders": [d.remainder_norm for d in result.diagnostics]}
    )
    return result


def effective_eigenvalue(nf: NormalFormResult, k) -> float:
    """E = H(hbar k) + hbar^kappa A~(0, hbar k) for a non-resonant site."""
    ctx = nf.ctx
    xi = ctx.hbar * np.asarray(k, dtype=float)
    if len(xi) != ctx.d:
        raise ValueError(f"Site {tuple(k)} does not match dimension d={ctx.d}")
    for R in zone_lattices(1, ctx):
        if in_zone(xi, R, nf.H, ctx):
            raise ResonantSiteError(
                f"Site hbar*k={xi.tolist()} lies in the order-1 resonance zone of {R.basis[0]}"
            )
    zero = (0,) * ctx.d
    a0 = nf.effective_average.coefficient(zero).evaluate(xi)
    return float(np.real(nf.H.value(xi)[0] + ctx.hbar**ctx.kappa * a0))
