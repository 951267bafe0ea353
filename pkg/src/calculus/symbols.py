# src/calculus/symbols.py
"""
Finite Fourier symbols P(x, xi) = sum_k P~(k, xi) exp(i k.x) on the torus and
their exact calculus: averages, adjoint, Moyal product, commutator,
expansion terms and the Poisson bracket with an x-independent Hamiltonian.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import TYPE_CHECKING, Iterable, Mapping

import numpy as np

from calculus.coefficients import (
    ZERO,
    CoefficientField,
    FieldEvaluator,
    as_field,
    combine,
    conjugate,
    multi_derivative,
    multiply,
    scale,
    shift,
)
from calculus.grids import SampleGrid, standard_grid
from core.context import SemiclassicalContext
from core.errors import SupportOverflowError
from core.settings import get_settings

if TYPE_CHECKING:
    from geometry.hamiltonian import Hamiltonian
    from geometry.lattices import ResonanceLattice

logger = logging.getLogger(__name__)

Mode = tuple[int, ...]


@dataclass(frozen=True, eq=False)
class FourierSymbol:
    ctx: SemiclassicalContext
    coeffs: Mapping[Mode, CoefficientField]

    def __post_init__(self):
        clean = {}
        for k, f in self.coeffs.items():
            key = tuple(int(v) for v in k)
            if len(key) != self.ctx.d:
                raise ValueError(f"Mode {key} does not match dimension d={self.ctx.d}")
            if not f.is_zero():
                clean[key] = f
        object.__setattr__(self, "coeffs", MappingProxyType(dict(sorted(clean.items()))))

    @property
    def support(self) -> frozenset[Mode]:
        return frozenset(self.coeffs)

    @property
    def radius(self) -> int:
        """max |k|_inf over the support (0 for an empty or x-independent symbol)."""
        return max((max(abs(v) for v in k) for k in self.coeffs), default=0)

    bandwidth = radius

    def coefficient(self, k: Iterable[int]) -> CoefficientField:
        return self.coeffs.get(tuple(k), ZERO)

    def is_x_independent(self) -> bool:
        return all(not any(k) for k in self.coeffs)

    def __add__(self, other: "FourierSymbol") -> "FourierSymbol":
        return add_symbols([(1.0, self), (1.0, other)])

    def __sub__(self, other: "FourierSymbol") -> "FourierSymbol":
        return add_symbols([(1.0, self), (-1.0, other)])

    def __mul__(self, c: complex) -> "FourierSymbol":
        return scale_symbol(c, self)

    __rmul__ = __mul__

    def __neg__(self) -> "FourierSymbol":
        return scale_symbol(-1.0, self)

    def __repr__(self) -> str:
        return f"FourierSymbol(d={self.ctx.d}, hbar={self.ctx.hbar}, support={sorted(self.coeffs)})"


# === Constructors ===

def zero_symbol(ctx: SemiclassicalContext) -> FourierSymbol:
    return FourierSymbol(ctx, {})


def constant_symbol(ctx: SemiclassicalContext, value: complex) -> FourierSymbol:
    return FourierSymbol(ctx, {(0,) * ctx.d: as_field(value)})


def x_independent(ctx: SemiclassicalContext, field: CoefficientField) -> FourierSymbol:
    return FourierSymbol(ctx, {(0,) * ctx.d: field})


def trigonometric(ctx: SemiclassicalContext, amplitudes: Mapping[Mode, complex]) -> FourierSymbol:
    """Symbol with constant coefficients, e.g. {(1,): 1, (-1,): 1} for 2cos x."""
    return FourierSymbol(ctx, {k: as_field(c) for k, c in amplitudes.items()})


# === Grid helpers ===

def grid_evaluator(grid: SampleGrid) -> FieldEvaluator:
    return FieldEvaluator(grid.xi_points, grid.store)


def prune(P: FourierSymbol, tol: float | None = None, grid: SampleGrid | None = None) -> FourierSymbol:
    """Drop coefficients whose sup over the validation xi-grid is below tol."""
    tol = get_settings().prune_tol if tol is None else tol
    grid = grid or standard_grid(P.ctx.d)
    ev = grid_evaluator(grid)
    kept = {}
    for k, f in P.coeffs.items():
        if np.max(np.abs(ev.evaluate(f))) >= tol:
            kept[k] = f
    if len(kept) != len(P.coeffs):
        logger.debug("pruned %d of %d modes", len(P.coeffs) - len(kept), len(P.coeffs))
    return FourierSymbol(P.ctx, kept)


def coefficient_values(P: FourierSymbol, grid: SampleGrid | None = None) -> dict[Mode, np.ndarray]:
    grid = grid or standard_grid(P.ctx.d)
    ev = grid_evaluator(grid)
    return {k: ev.evaluate(f) for k, f in P.coeffs.items()}


def coefficient_distance(A: FourierSymbol, B: FourierSymbol, grid: SampleGrid | None = None) -> float:
    """max over modes and xi-grid points of |A~(k, xi) - B~(k, xi)|."""
    grid = grid or standard_grid(A.ctx.d)
    ev = grid_evaluator(grid)
    worst = 0.0
    for k in A.support | B.support:
        diff = ev.evaluate(A.coefficient(k)) - ev.evaluate(B.coefficient(k))
        worst = max(worst, float(np.max(np.abs(diff))))
    return worst


def symbol_values(P: FourierSymbol, x_points: np.ndarray, xi_points: np.ndarray) -> np.ndarray:
    """Matrix of P(x, xi) with rows over x_points and columns over xi_points."""
    x_points = np.atleast_2d(np.asarray(x_points, dtype=float))
    xi_points = np.atleast_2d(np.asarray(xi_points, dtype=float))
    if not P.coeffs:
        return np.zeros((x_points.shape[0], xi_points.shape[0]), dtype=complex)
    modes = np.array(list(P.coeffs), dtype=float)
    ev = FieldEvaluator(xi_points)
    coeffs = np.array(ev.evaluate_many(list(P.coeffs.values())))
    phases = np.exp(1j * x_points @ modes.T)
    return phases @ coeffs


def symbol_sup_norm(P: FourierSymbol, grid: SampleGrid | None = None) -> float:
    """sup over the x- and xi-validation grids of |P(x, xi)|."""
    if not P.coeffs:
        return 0.0
    grid = grid or standard_grid(P.ctx.d)
    ev = grid_evaluator(grid)
    modes = np.array(list(P.coeffs), dtype=float)
    coeffs = np.array(ev.evaluate_many(list(P.coeffs.values())))
    values = np.exp(1j * grid.x_points @ modes.T) @ coeffs
    return float(np.max(np.abs(values)))


def is_self_adjoint(P: FourierSymbol, tol: float = 1e-10, grid: SampleGrid | None = None) -> bool:
    return coefficient_distance(P, adjoint(P), grid) <= tol


def is_real_symbol(P: FourierSymbol, tol: float = 1e-12, grid: SampleGrid | None = None) -> bool:
    """P~(-k, xi) == conj P~(k, xi) on the grid, i.e. P is real-valued."""
    grid = grid or standard_grid(P.ctx.d)
    ev = grid_evaluator(grid)
    for k, f in P.coeffs.items():
        mirror = tuple(-v for v in k)
        diff = ev.evaluate(P.coefficient(mirror)) - np.conj(ev.evaluate(f))
        if np.max(np.abs(diff)) > tol:
            return False
    return True


# === Linear structure ===

def add_symbols(terms: Iterable[tuple[complex, FourierSymbol]], prune_result: bool = True) -> FourierSymbol:
    terms = list(terms)
    ctx = _shared_ctx(*(P for _, P in terms))
    grouped: dict[Mode, list] = {}
    for c, P in terms:
        for k, f in P.coeffs.items():
            grouped.setdefault(k, []).append((c, f))
    out = FourierSymbol(ctx, {k: combine(parts) for k, parts in grouped.items()})
    return prune(out) if prune_result else out


def scale_symbol(c: complex, P: FourierSymbol) -> FourierSymbol:
    return FourierSymbol(P.ctx, {k: scale(c, f) for k, f in P.coeffs.items()})


def _shared_ctx(*symbols: FourierSymbol) -> SemiclassicalContext:
    ctx = symbols[0].ctx
    for P in symbols[1:]:
        if P.ctx != ctx:
            raise ValueError(f"Symbols do not share a context: {ctx} vs {P.ctx}")
    return ctx


def _check_support(modes: Iterable[Mode], cap: int | None, step: str | None = None) -> None:
    cap = get_settings().support_cap if cap is None else cap
    radius = max((max(abs(v) for v in k) for k in modes), default=0)
    if radius > cap:
        raise SupportOverflowError(radius, cap, step)


# === Calculus ===

def eval_symbol(P: FourierSymbol, x, xi) -> complex:
    """sum_k P~(k, xi) exp(i k.x) at a single point."""
    x = np.asarray(x, dtype=float).reshape(-1)
    xi = np.asarray(xi, dtype=float).reshape(-1)
    total = 0j
    for k, f in P.coeffs.items():
        total += f.evaluate(xi) * np.exp(1j * float(np.dot(k, x)))
    return complex(total)


def torus_average(P: FourierSymbol) -> FourierSymbol:
    zero = (0,) * P.ctx.d
    return FourierSymbol(P.ctx, {zero: P.coefficient(zero)})


def lattice_average(P: FourierSymbol, R: "ResonanceLattice") -> FourierSymbol:
    """Keep exactly the Fourier modes lying in R."""
    return FourierSymbol(P.ctx, {k: f for k, f in P.coeffs.items() if R.contains(k)})


def adjoint(P: FourierSymbol) -> FourierSymbol:
    """P*~(k, xi) = conj P~(-k, xi + hbar k)."""
    hbar = P.ctx.hbar
    out = {}
    for k, f in P.coeffs.items():
        mirror = tuple(-v for v in k)
        out[mirror] = conjugate(shift(f, [hbar * v for v in mirror]))
    return FourierSymbol(P.ctx, out)


def _moyal_unpruned(A: FourierSymbol, B: FourierSymbol, cap: int | None) -> FourierSymbol:
    ctx = _shared_ctx(A, B)
    hbar = ctx.hbar
    pairs: dict[Mode, list] = {}
    for a in A.coeffs:
        for b in B.coeffs:
            m = tuple(x + y for x, y in zip(a, b))
            pairs.setdefault(m, []).append((a, b))
    _check_support(pairs, cap)
    out = {}
    for m, contributions in pairs.items():
        terms = []
        for a, b in contributions:
            shifted = shift(A.coeffs[a], [hbar * v for v in b])
            terms.append((1.0, multiply(shifted, B.coeffs[b])))
        out[m] = combine(terms)
    return FourierSymbol(ctx, out)


def moyal_product(A: FourierSymbol, B: FourierSymbol, cap: int | None = None) -> FourierSymbol:
    """(A#B)~(m, xi) = sum_{k in S_B} A~(m-k, xi + hbar k) B~(k, xi)."""
    return prune(_moyal_unpruned(A, B, cap))


def commutator(A: FourierSymbol, B: FourierSymbol, cap: int | None = None) -> FourierSymbol:
    return add_symbols([(1.0, _moyal_unpruned(A, B, cap)), (-1.0, _moyal_unpruned(B, A, cap))])


def pointwise_product(A: FourierSymbol, B: FourierSymbol, cap: int | None = None) -> FourierSymbol:
    """The product of A and B as functions of (x, xi): a plain Fourier convolution."""
    ctx = _shared_ctx(A, B)
    grouped: dict[Mode, list] = {}
    for a, fa in A.coeffs.items():
        for b, fb in B.coeffs.items():
            m = tuple(x + y for x, y in zip(a, b))
            grouped.setdefault(m, []).append((1.0, multiply(fa, fb)))
    _check_support(grouped, cap)
    return prune(FourierSymbol(ctx, {m: combine(t) for m, t in grouped.items()}))


def multi_indices(d: int, order: int) -> list[tuple[int, ...]]:
    """All multi-indices of length d with |alpha| == order, in lexicographic order."""
    return [a for a in itertools.product(range(order + 1), repeat=d) if sum(a) == order]


def _factorial(alpha: tuple[int, ...]) -> int:
    return math.prod(math.factorial(a) for a in alpha)


def x_derivative(P: FourierSymbol, alpha: tuple[int, ...]) -> FourierSymbol:
    """d_x^alpha P, exact in Fourier: (ik)^alpha P~(k, xi)."""
    out = {}
    for k, f in P.coeffs.items():
        factor = complex(np.prod([(1j * kv) ** a for kv, a in zip(k, alpha)]))
        out[k] = scale(factor, f)
    return FourierSymbol(P.ctx, out)


def xi_derivative(P: FourierSymbol, beta: tuple[int, ...]) -> FourierSymbol:
    step = P.ctx.fd_step
    return FourierSymbol(P.ctx, {k: multi_derivative(f, beta, step) for k, f in P.coeffs.items()})


def moyal_expansion_term(A: FourierSymbol, B: FourierSymbol, j: int) -> FourierSymbol:
    """C_j = (hbar/i)^j sum_{|alpha|=j} (1/alpha!) d_xi^alpha A d_x^alpha B."""
    if j < 0:
        raise ValueError(f"Expansion order must be nonnegative, got {j}")
    ctx = _shared_ctx(A, B)
    prefactor = (ctx.hbar / 1j) ** j
    pieces = []
    for alpha in multi_indices(ctx.d, j):
        dxB = x_derivative(B, alpha)
        if not dxB.coeffs:
            continue
        term = pointwise_product(xi_derivative(A, alpha), dxB)
        pieces.append((prefactor / _factorial(alpha), term))
    if not pieces:
        return zero_symbol(ctx)
    return add_symbols(pieces)


def adjoint_expansion_term(P: FourierSymbol, j: int) -> FourierSymbol:
    """(hbar/i)^j sum_{|g|=j} (1/g!) d_x^g d_xi^g conj(P): the j-th term of P* in powers of hbar."""
    ctx = P.ctx
    conj_P = FourierSymbol(ctx, {tuple(-v for v in k): conjugate(f) for k, f in P.coeffs.items()})
    prefactor = (ctx.hbar / 1j) ** j
    pieces = []
    for g in multi_indices(ctx.d, j):
        pieces.append((prefactor / _factorial(g), x_derivative(xi_derivative(conj_P, g), g)))
    return add_symbols(pieces)


def poisson_with_H(P: FourierSymbol, H: "Hamiltonian") -> FourierSymbol:
    """{P, H}~(k, xi) = i Omega_k(xi) P~(k, xi); the k = 0 mode vanishes."""
    out = {}
    for k, f in P.coeffs.items():
        if any(k):
            out[k] = multiply(1j, H.omega_field(k), f)
    return prune(FourierSymbol(P.ctx, out))
