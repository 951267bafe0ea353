# src/geometry/hamiltonian.py
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from calculus.coefficients import CoefficientField, FieldEvaluator, combine, derivative, polynomial
from calculus.symbols import FourierSymbol, x_independent
from core.context import SemiclassicalContext


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """
    Completely integrable Hamiltonian H(xi) with symbolic gradient and Hessian.

    Fields do not depend on hbar, so `with_hbar` rebinds the same expressions
    to another context.
    """

    ctx: SemiclassicalContext
    energy: CoefficientField
    gradient: tuple[CoefficientField, ...]
    hessian: tuple[tuple[CoefficientField, ...], ...]
    name: str = "custom"
    params: dict = field(default_factory=dict)
    _omega_cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_field(
        cls,
        ctx: SemiclassicalContext,
        h: CoefficientField,
        name: str = "custom",
        params: dict | None = None,
    ) -> "Hamiltonian":
        grad = tuple(derivative(h, i) for i in range(ctx.d))
        hess = tuple(tuple(derivative(g, j) for j in range(ctx.d)) for g in grad)
        return cls(ctx, h, grad, hess, name, dict(params or {}))

    def with_hbar(self, hbar: float) -> "Hamiltonian":
        return Hamiltonian(
            self.ctx.with_hbar(hbar),
            self.energy,
            self.gradient,
            self.hessian,
            self.name,
            self.params,
            _omega_cache=self._omega_cache,
        )

    @property
    def symbol(self) -> FourierSymbol:
        return x_independent(self.ctx, self.energy)

    def value(self, xi) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(xi, dtype=float))
        return FieldEvaluator(pts).evaluate(self.energy).real

    def grad(self, xi) -> np.ndarray:
        """(n, d) array of gradients; a single point gives shape (d,)."""
        xi = np.asarray(xi, dtype=float)
        pts = np.atleast_2d(xi)
        ev = FieldEvaluator(pts)
        out = np.stack([ev.evaluate(g).real for g in self.gradient], axis=1)
        return out[0] if xi.ndim == 1 else out

    def hess(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        pts = np.atleast_2d(xi)
        ev = FieldEvaluator(pts)
        out = np.stack(
            [np.stack([ev.evaluate(h).real for h in row], axis=1) for row in self.hessian], axis=1
        )
        return out[0] if xi.ndim == 1 else out

    def omega_field(self, k: Sequence[int]) -> CoefficientField:
        """Omega_k(xi) = <grad H(xi), k> as a shared expression node."""
        key = tuple(int(v) for v in k)
        node = self._omega_cache.get(key)
        if node is None:
            node = combine([(float(kv), g) for kv, g in zip(key, self.gradient)])
            node = self._omega_cache.setdefault(key, node)
        return node


def quadratic(ctx: SemiclassicalContext, M, b=None) -> Hamiltonian:
    """H(xi) = 1/2 <xi, M xi> + <b, xi> with M symmetric and invertible."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    b = np.zeros(ctx.d) if b is None else np.asarray(b, dtype=float)
    if M.shape != (ctx.d, ctx.d):
        raise ValueError(f"Quadratic Hamiltonian needs a {ctx.d}x{ctx.d} matrix, got {M.shape}")
    if not np.allclose(M, M.T):
        raise ValueError("Quadratic Hamiltonian matrix must be symmetric")
    if abs(np.linalg.det(M)) < 1e-12:
        raise ValueError("Quadratic Hamiltonian matrix must be invertible")
    h = polynomial(ctx.d, 0.0, b, M / 2.0)
    return Hamiltonian.from_field(ctx, h, "quadratic", {"matrix": M.tolist(), "linear": b.tolist()})


def free(ctx: SemiclassicalContext, mass_scale: float = 1.0) -> Hamiltonian:
    """H(xi) = mass_scale/2 * |xi|^2; mass_scale=2 gives |xi|^2."""
    return quadratic(ctx, mass_scale * np.eye(ctx.d))


def linear(ctx: SemiclassicalContext, omega) -> Hamiltonian:
    """H(xi) = <omega, xi>: degenerate, used as a negative control."""
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (ctx.d,):
        raise ValueError(f"Frequency vector must have length {ctx.d}")
    h = polynomial(ctx.d, 0.0, omega)
    return Hamiltonian.from_field(ctx, h, "linear", {"omega": omega.tolist()})


def omega(H: Hamiltonian, k: Sequence[int], xi) -> float | np.ndarray:
    """Omega_k(xi) = <grad H(xi), k>."""
    return H.grad(xi) @ np.asarray(k, dtype=float)


def gradient_consistency(H: Hamiltonian, points: np.ndarray, t: float = 1e-5) -> float:
    """Largest deviation between grad H and central differences of H at the points."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    worst = 0.0
    analytic = H.grad(points)
    for i in range(H.ctx.d):
        e = np.zeros(H.ctx.d)
        e[i] = t
        fd = (H.value(points + e) - H.value(points - e)) / (2.0 * t)
        worst = max(worst, float(np.max(np.abs(fd - analytic[:, i]))))
    return worst
