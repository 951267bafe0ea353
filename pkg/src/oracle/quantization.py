# src/oracle/quantization.py
"""
Brute-force oracle: left quantization of Fourier symbols on a truncated
Fourier basis, Hermitian eigensolves and unitary exponentials.
"""
import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg

from calculus.coefficients import FieldEvaluator
from calculus.symbols import FourierSymbol, is_self_adjoint
from core.context import SemiclassicalContext
from core.errors import BasisTooSmallError, NotSelfAdjointError
from core.settings import get_settings

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-10
UNITARY_TOL = 1e-10


@dataclass
class OperatorMatrix:
    """
    Matrix of a symbol over the window W = {k : |k - center|_inf <= K_basis},
    with M[m, k] = P~(m - k, hbar k). Modes are ordered lexicographically,
    last axis fastest.
    """

    ctx: SemiclassicalContext
    K_basis: int
    center: tuple[int, ...]
    matrix: np.ndarray
    bandwidth: int
    margin: int = 2
    name: str = ""

    @cached_property
    def modes(self) -> np.ndarray:
        return basis_modes(self.ctx.d, self.K_basis, self.center)

    @cached_property
    def index(self) -> dict[tuple[int, ...], int]:
        return {tuple(int(v) for v in k): i for i, k in enumerate(self.modes)}

    @cached_property
    def interior(self) -> np.ndarray:
        """Indices of modes with |k - center|_inf <= K_basis - bandwidth * margin."""
        reach = self.K_basis - self.bandwidth * self.margin
        offsets = np.max(np.abs(self.modes - np.asarray(self.center)), axis=1)
        return np.flatnonzero(offsets <= reach)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def interior_block(self, matrix: np.ndarray | None = None) -> np.ndarray:
        matrix = self.matrix if matrix is None else matrix
        return matrix[np.ix_(self.interior, self.interior)]

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T))) if self.size else 0.0

    def basis_vector(self, k: Sequence[int]) -> np.ndarray:
        key = tuple(int(v) for v in k)
        if key not in self.index:
            raise BasisTooSmallError(f"Site {key} lies outside the basis window")
        e = np.zeros(self.size, dtype=complex)
        e[self.index[key]] = 1.0
        return e


def basis_modes(d: int, K_basis: int, center: Sequence[int] | None = None) -> np.ndarray:
    c = np.zeros(d, dtype=int) if center is None else np.asarray(center, dtype=int)
    grid = itertools.product(range(-K_basis, K_basis + 1), repeat=d)
    return np.array(list(grid), dtype=int).reshape(-1, d) + c


def _linear_index(targets: np.ndarray, K_basis: int, center: np.ndarray) -> np.ndarray:
    width = 2 * K_basis + 1
    local = targets - center + K_basis
    idx = np.zeros(targets.shape[0], dtype=int)
    for axis in range(targets.shape[1]):
        idx = idx * width + local[:, axis]
    return idx


def quantize(
    P: FourierSymbol,
    K_basis: int,
    center: Sequence[int] | None = None,
    bandwidth: int | None = None,
    margin: int | None = None,
) -> OperatorMatrix:
    """Left quantization of P on the window of half-width K_basis around center."""
    ctx = P.ctx
    bw = P.radius if bandwidth is None else max(int(bandwidth), P.radius)
    if K_basis < bw + 1:
        raise BasisTooSmallError(f"K_basis={K_basis} must be at least bandwidth + 1 = {bw + 1}")
    margin = get_settings().interior_margin if margin is None else margin
    c = np.zeros(ctx.d, dtype=int) if center is None else np.asarray(center, dtype=int)
    if c.shape != (ctx.d,):
        raise ValueError(f"Window center {c.tolist()} does not match dimension d={ctx.d}")
    modes = basis_modes(ctx.d, K_basis, c)
    n = modes.shape[0]
    matrix = np.zeros((n, n), dtype=complex)
    if P.coeffs:
        ev = FieldEvaluator(ctx.hbar * modes.astype(float))
        for j, f in P.coeffs.items():
            targets = modes + np.asarray(j, dtype=int)
            valid = np.all(np.abs(targets - c) <= K_basis, axis=1)
            if not np.any(valid):
                continue
            values = ev.evaluate(f)
            rows = _linear_index(targets[valid], K_basis, c)
            cols = np.flatnonzero(valid)
            matrix[rows, cols] = values[valid]
    return OperatorMatrix(ctx, K_basis, tuple(int(v) for v in c), matrix, bw, margin)


@dataclass
class Spectrum:
    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def nearest(self, E: float) -> tuple[float, float]:
        """(eigenvalue nearest to E, its distance)."""
        i = int(np.argmin(np.abs(self.values - E)))
        return float(self.values[i]), float(abs(self.values[i] - E))


def check_hermitian(matrix: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    defect = float(np.max(np.abs(matrix - matrix.conj().T))) if matrix.size else 0.0
    if defect > tol:
        raise NotSelfAdjointError(f"Matrix is not Hermitian: defect {defect:.3e} exceeds {tol}")


def eigensolve(M: OperatorMatrix | np.ndarray, tol: float = HERMITIAN_TOL) -> Spectrum:
    """Full ascending spectrum of a Hermitian matrix, symmetrized before solving."""
    matrix = M.matrix if isinstance(M, OperatorMatrix) else np.asarray(M)
    check_hermitian(matrix, tol)
    sym = 0.5 * (matrix + matrix.conj().T)
    values, vectors = scipy.linalg.eigh(sym)
    residuals = np.linalg.norm(sym @ vectors - vectors * values, axis=0)
    logger.debug("eigensolve n=%d, max residual %.2e", matrix.shape[0], residuals.max(initial=0.0))
    return Spectrum(values, vectors, residuals)


def hermitian_exp(matrix: np.ndarray, scale: float) -> np.ndarray:
    """exp(i scale matrix) for a Hermitian matrix, via its eigendecomposition."""
    check_hermitian(matrix)
    values, vectors = scipy.linalg.eigh(0.5 * (matrix + matrix.conj().T))
    U = (vectors * np.exp(1j * scale * values)) @ vectors.conj().T
    defect = float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0])))) if U.size else 0.0
    if defect > UNITARY_TOL:
        raise RuntimeError(f"Exponential is not unitary: defect {defect:.3e}")
    return U


def unitary_exp(
    P: FourierSymbol,
    scale: float,
    K_basis: int,
    center: Sequence[int] | None = None,
) -> np.ndarray:
    """exp(i scale quantize(P)) for a self-adjoint symbol P."""
    if not is_self_adjoint(P, HERMITIAN_TOL):
        raise NotSelfAdjointError("Generator symbol is not self-adjoint")
    return hermitian_exp(quantize(P, K_basis, center).matrix, scale)
