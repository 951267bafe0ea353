# src/averaging/homological.py
"""
hbar^delta-averages of a perturbation symbol and the closed-form solution of
the homological equation {P, H} + K - A = 0.
"""
import logging
import math

import numpy as np

from calculus.coefficients import CoefficientField, compose, multiply, scale
from calculus.grids import SampleGrid, standard_grid
from calculus.symbols import (
    FourierSymbol,
    add_symbols,
    adjoint,
    grid_evaluator,
    is_self_adjoint,
)
from core.errors import NotSelfAdjointError
from geometry.hamiltonian import Hamiltonian

logger = logging.getLogger(__name__)

SELF_ADJOINT_TOL = 1e-10


def small_divisor_argument(H: Hamiltonian, k: tuple[int, ...]) -> CoefficientField:
    """t_k(xi) = Omega_k(xi) / (|k| hbar^delta), shared per (k, hbar^delta)."""
    hd = H.ctx.hdelta
    key = ("t", k, hd)
    node = H._omega_cache.get(key)
    if node is None:
        norm = math.sqrt(sum(v * v for v in k))
        node = H._omega_cache.setdefault(key, scale(1.0 / (norm * hd), H.omega_field(k)))
    return node


def hdelta_average(K: FourierSymbol, H: Hamiltonian) -> FourierSymbol:
    """A~(k, xi) = chi(t_k(xi)) K~(k, xi) for k != 0; the k = 0 coefficient is kept as is."""
    out = {}
    for k, f in K.coeffs.items():
        if not any(k):
            out[k] = f
        else:
            out[k] = multiply(compose("chi", small_divisor_argument(H, k)), f)
    return FourierSymbol(K.ctx, out)


def _require_self_adjoint(K: FourierSymbol) -> None:
    if not is_self_adjoint(K, SELF_ADJOINT_TOL):
        raise NotSelfAdjointError(
            f"Symbol with support {sorted(K.support)} is not self-adjoint within {SELF_ADJOINT_TOL}"
        )


def self_adjoint_part(P: FourierSymbol) -> FourierSymbol:
    """(P + P*) / 2."""
    return add_symbols([(0.5, P), (0.5, adjoint(P))])


def selfadjoint_hdelta_average(K: FourierSymbol, H: Hamiltonian) -> FourierSymbol:
    _require_self_adjoint(K)
    return self_adjoint_part(hdelta_average(K, H))


def solve_homological(K: FourierSymbol, H: Hamiltonian) -> tuple[FourierSymbol, FourierSymbol]:
    """
    Returns (P, A) with A the hbar^delta-average of K and, for k != 0,
    P~(k) = i K~(k) phi(t_k) / (|k| hbar^delta), so that
    i Omega_k P~ + K~ - A~ vanishes identically. P~(0) = 0.
    """
    A = hdelta_average(K, H)
    hd = K.ctx.hdelta
    out = {}
    for k, f in K.coeffs.items():
        if not any(k):
            continue
        norm = math.sqrt(sum(v * v for v in k))
        out[k] = multiply(1j / (norm * hd), compose("phi", small_divisor_argument(H, k)), f)
    return FourierSymbol(K.ctx, out), A


def selfadjoint_homological(K: FourierSymbol, H: Hamiltonian) -> tuple[FourierSymbol, FourierSymbol]:
    """Self-adjoint parts of the homological pair; the identity then holds up to O(hbar^(1-delta))."""
    _require_self_adjoint(K)
    P, A = solve_homological(K, H)
    return self_adjoint_part(P), self_adjoint_part(A)


def homological_residual(
    P: FourierSymbol,
    K: FourierSymbol,
    A: FourierSymbol,
    H: Hamiltonian,
    grid: SampleGrid | None = None,
) -> float:
    """max over modes and xi-grid points of |i Omega_k P~ + K~ - A~|."""
    grid = grid or standard_grid(K.ctx.d)
    ev = grid_evaluator(grid)
    worst = 0.0
    for k in P.support | K.support | A.support:
        value = ev.evaluate(K.coefficient(k)) - ev.evaluate(A.coefficient(k))
        if any(k):
            value = value + 1j * ev.evaluate(H.omega_field(k)) * ev.evaluate(P.coefficient(k))
        worst = max(worst, float(np.max(np.abs(value))))
    return worst
