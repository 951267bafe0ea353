# src/geometry/zones.py
"""Resonance zones, blocks and the geometric small-divisor lemma."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, root

from core.context import SemiclassicalContext
from geometry.hamiltonian import Hamiltonian
from geometry.lattices import ResonanceLattice, enumerate_lattices, euclidean_norm, lattice_points

logger = logging.getLogger(__name__)


def zone_threshold(R: ResonanceLattice, ctx: SemiclassicalContext) -> float:
    """2^n hbar^(delta - gamma n) / vol(R)."""
    n = R.dim
    return 2.0**n * ctx.hbar ** (ctx.delta - ctx.gamma * n) / R.covolume


def projected_gradient_norm(xi, R: ResonanceLattice, H: Hamiltonian) -> np.ndarray:
    """Norm of the orthogonal projection of grad H(xi) onto span(R)."""
    g = np.atleast_2d(H.grad(np.atleast_2d(np.asarray(xi, dtype=float))))
    if R.dim == 0:
        return np.zeros(g.shape[0])
    return np.linalg.norm(g @ R.span_basis, axis=1)


def _single(xi, values):
    return bool(values[0]) if np.asarray(xi).ndim == 1 else values


def in_zone(xi, R: ResonanceLattice, H: Hamiltonian, ctx: SemiclassicalContext | None = None):
    """
    True where sup_{X in span R} |Omega_X(xi)|/|X| lies below the zone threshold.
    Accepts one point (d,) or a batch (N, d).
    """
    ctx = ctx or H.ctx
    pts = np.atleast_2d(np.asarray(xi, dtype=float))
    if R.dim == 0:
        return _single(xi, np.ones(pts.shape[0], dtype=bool))
    inside = projected_gradient_norm(pts, R, H) < zone_threshold(R, ctx)
    return _single(xi, inside)


def zone_lattices(n: int, ctx: SemiclassicalContext) -> list[ResonanceLattice]:
    """All resonance hbar^-gamma lattices of rank n."""
    return enumerate_lattices(n, ctx.resonance_bound, ctx.d)


def in_zone_star(xi, n: int, H: Hamiltonian, ctx: SemiclassicalContext | None = None):
    """Membership in Z_n^*, the union of all order-n resonance zones; Z_0^* is everything, Z_{d+1}^* is empty."""
    ctx = ctx or H.ctx
    pts = np.atleast_2d(np.asarray(xi, dtype=float))
    if not 0 <= n <= ctx.d + 1:
        raise ValueError(f"Zone order must satisfy 0 <= n <= d+1={ctx.d + 1}, got {n}")
    if n == 0:
        return _single(xi, np.ones(pts.shape[0], dtype=bool))
    if n == ctx.d + 1:
        return _single(xi, np.zeros(pts.shape[0], dtype=bool))
    hit = np.zeros(pts.shape[0], dtype=bool)
    for R in zone_lattices(n, ctx):
        hit |= in_zone(pts, R, H, ctx)
    return _single(xi, hit)


def in_block(xi, R: ResonanceLattice, H: Hamiltonian, ctx: SemiclassicalContext | None = None):
    """B_R = Z_R minus Z_{dim R + 1}^*; the trivial lattice gives the non-resonant block."""
    ctx = ctx or H.ctx
    pts = np.atleast_2d(np.asarray(xi, dtype=float))
    inside = in_zone(pts, R, H, ctx) & ~in_zone_star(pts, R.dim + 1, H, ctx)
    return _single(xi, inside)


def zone_star_table(points: np.ndarray, H: Hamiltonian, ctx: SemiclassicalContext | None = None) -> np.ndarray:
    """(N, d+2) boolean table of Z_n^* membership for n = 0..d+1."""
    ctx = ctx or H.ctx
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return np.stack([in_zone_star(pts, n, H, ctx) for n in range(ctx.d + 2)], axis=1)


def block_table(points: np.ndarray, H: Hamiltonian, ctx: SemiclassicalContext | None = None) -> np.ndarray:
    """(N, d+1) boolean table of B_n^* membership; rows may have several entries set."""
    zones = zone_star_table(points, H, ctx)
    return zones[:, :-1] & ~zones[:, 1:]


def containing_block(xi, H: Hamiltonian, ctx: SemiclassicalContext | None = None) -> ResonanceLattice | None:
    """Some lattice R with xi in B_R, lowest order first; None only if the covering fails."""
    ctx = ctx or H.ctx
    point = np.asarray(xi, dtype=float)
    if not in_zone_star(point, 1, H, ctx):
        return ResonanceLattice.trivial(ctx.d)
    for n in range(1, ctx.d + 1):
        for R in zone_lattices(n, ctx):
            if in_block(point, R, H, ctx):
                return R
    return None


# === Geometric lemma ===

@dataclass
class GeometricLemmaReport:
    xi: tuple[float, ...]
    lattice: list[list[int]]
    in_block: bool
    scanned: int
    violations: list[tuple[tuple[int, ...], float]] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return not self.violations


def check_geometric_lemma(
    xi, R: ResonanceLattice, H: Hamiltonian, ctx: SemiclassicalContext | None = None
) -> GeometricLemmaReport:
    """
    Scan every k outside R with |k| <= hbar^-gamma and report those with
    |Omega_k(xi)|/|k| < hbar^delta.
    """
    ctx = ctx or H.ctx
    if R.dim >= ctx.d:
        raise ValueError(f"Geometric lemma needs dim R < d, got dim R = {R.dim}, d = {ctx.d}")
    point = np.asarray(xi, dtype=float)
    g = H.grad(point)
    report = GeometricLemmaReport(
        xi=tuple(float(v) for v in point),
        lattice=R.to_json(),
        in_block=bool(in_block(point, R, H, ctx)),
        scanned=0,
    )
    floor = ctx.hdelta
    for k in lattice_points(ctx.d, ctx.resonance_bound):
        if R.contains(k):
            continue
        report.scanned += 1
        ratio = abs(float(g @ np.asarray(k, dtype=float))) / euclidean_norm(k)
        if ratio < floor:
            report.violations.append((k, ratio))
    return report


# === Resonance surfaces ===

def sigma_point(H: Hamiltonian, R: ResonanceLattice, xi0, tol: float = 1e-12) -> np.ndarray:
    """
    A point of Sigma_R = {xi : Omega_k(xi) = 0 for k in R} near xi0, found by
    root-finding along span(R) from xi0.
    """
    xi0 = np.asarray(xi0, dtype=float)
    if R.dim == 0:
        return xi0
    basis = R.basis_array
    if R.dim == 1:
        k = basis[0]

        def along(t: float, u: np.ndarray) -> float:
            return float(H.grad(xi0 + t * u) @ k)

        if along(0.0, np.zeros_like(k)) == 0.0:
            return xi0
        direction = H.hess(xi0) @ k
        if np.linalg.norm(direction) == 0.0:
            direction = k
        u = direction / np.linalg.norm(direction)
        f0 = along(0.0, u)
        span = 1.0
        while span < 2.0**20:
            for t in (span, -span):
                ft = along(t, u)
                if ft == 0.0:
                    return xi0 + t * u
                if np.sign(ft) != np.sign(f0):
                    lo, hi = sorted((0.0, t))
                    t_star = brentq(lambda s: along(s, u), lo, hi, xtol=tol)
                    return xi0 + t_star * u
            span *= 2.0
        raise ValueError(f"No point of Sigma_R found from {xi0.tolist()} for R={R.to_json()}")

    q = R.span_basis

    def equations(c: np.ndarray) -> np.ndarray:
        return basis @ H.grad(xi0 + q @ c)

    sol = root(equations, np.zeros(R.dim), tol=tol)
    if not sol.success:
        raise ValueError(f"No point of Sigma_R found from {xi0.tolist()} for R={R.to_json()}: {sol.message}")
    return xi0 + q @ sol.x


@dataclass
class NondegeneracyReport:
    min_differential: float
    samples: int
    accepted: bool
    worst_mode: tuple[int, ...] | None = None


def check_nondegenerate(
    H: Hamiltonian,
    bound: float,
    samples_per_mode: int = 4,
    seed: int = 0,
    window: float = 2.0,
    threshold: float = 1e-8,
) -> NondegeneracyReport:
    """Reject H when |d(Omega_k)| <= threshold somewhere on a sampled Sigma_k, primitive |k| <= bound."""
    rng = np.random.default_rng(seed)
    worst = np.inf
    worst_mode = None
    count = 0
    for R in enumerate_lattices(1, bound, H.ctx.d):
        k = R.basis_array[0]
        for xi0 in rng.uniform(-window, window, size=(samples_per_mode, H.ctx.d)):
            try:
                point = sigma_point(H, R, xi0)
            except ValueError:
                continue
            count += 1
            size = float(np.linalg.norm(H.hess(point) @ k))
            if size < worst:
                worst, worst_mode = size, R.basis[0]
    accepted = count == 0 or worst > threshold
    logger.debug("nondegeneracy: %d samples, min |dOmega| = %s", count, worst)
    return NondegeneracyReport(float(worst), count, accepted, worst_mode)
