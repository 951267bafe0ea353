# src/geometry/lattices.py
"""Integer sub-lattices of Z^d in row Hermite normal form, and their enumeration."""
import itertools
import logging
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np

from core.errors import EnumerationCapError
from core.settings import get_settings

logger = logging.getLogger(__name__)

Row = tuple[int, ...]
NORM_SLACK = 1e-12


def hermite_normal_form(rows: Sequence[Sequence[int]]) -> tuple[Row, ...]:
    """
    Row-style Hermite normal form of the lattice spanned by `rows`.

    Pivots strictly increase left to right, are positive, and every entry
    above a pivot lies in [0, pivot). Zero rows are dropped, so the number of
    returned rows is the rank.
    """
    work = [[int(v) for v in r] for r in rows]
    if not work:
        return ()
    n, d = len(work), len(work[0])
    pivot_row = 0
    for col in range(d):
        if pivot_row >= n:
            break
        while True:
            live = [r for r in range(pivot_row, n) if work[r][col] != 0]
            if not live:
                break
            best = min(live, key=lambda r: abs(work[r][col]))
            work[pivot_row], work[best] = work[best], work[pivot_row]
            settled = True
            p = work[pivot_row][col]
            for r in range(pivot_row + 1, n):
                q = work[r][col] // p
                if q:
                    work[r] = [a - q * b for a, b in zip(work[r], work[pivot_row])]
                if work[r][col] != 0:
                    settled = False
            if settled:
                break
        if work[pivot_row][col] == 0:
            continue
        if work[pivot_row][col] < 0:
            work[pivot_row] = [-a for a in work[pivot_row]]
        p = work[pivot_row][col]
        for r in range(pivot_row):
            q = work[r][col] // p
            if q:
                work[r] = [a - q * b for a, b in zip(work[r], work[pivot_row])]
        pivot_row += 1
    return tuple(tuple(r) for r in work[:pivot_row] if any(r))


def euclidean_norm(k: Sequence[int]) -> float:
    return math.sqrt(sum(v * v for v in k))


@dataclass(frozen=True)
class ResonanceLattice:
    """
    Sub-lattice of Z^d held by its canonical (HNF) basis.

    `max_basis_norm` is the largest vector norm of the shortest generating
    basis seen when the lattice was built; it may be smaller than the norms
    of the canonical rows.
    """

    d: int
    basis: tuple[Row, ...]
    max_basis_norm: float = 0.0

    @classmethod
    def from_generators(cls, d: int, generators: Iterable[Sequence[int]]) -> "ResonanceLattice":
        gens = [tuple(int(v) for v in g) for g in generators]
        for g in gens:
            if len(g) != d:
                raise ValueError(f"Generator {g} does not match dimension d={d}")
        basis = hermite_normal_form(gens)
        if len(basis) != len([g for g in gens if any(g)]):
            # dependent generators: fall back to canonical rows for the norm
            norm = max((euclidean_norm(r) for r in basis), default=0.0)
        else:
            norm = max((euclidean_norm(g) for g in gens), default=0.0)
        return cls(d, basis, norm)

    @classmethod
    def trivial(cls, d: int) -> "ResonanceLattice":
        return cls(d, (), 0.0)

    @classmethod
    def full(cls, d: int) -> "ResonanceLattice":
        return cls.from_generators(d, np.eye(d, dtype=int).tolist())

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def basis_array(self) -> np.ndarray:
        return np.array(self.basis, dtype=float).reshape(self.dim, self.d)

    @cached_property
    def covolume(self) -> float:
        if self.dim == 0:
            return 1.0
        b = self.basis_array
        return float(math.sqrt(np.linalg.det(b @ b.T)))

    @cached_property
    def span_basis(self) -> np.ndarray:
        """Orthonormal basis of span(R) as columns of a (d, n) array."""
        if self.dim == 0:
            return np.zeros((self.d, 0))
        q, _ = np.linalg.qr(self.basis_array.T)
        return q

    def contains(self, k: Sequence[int]) -> bool:
        rest = [int(v) for v in k]
        for row in self.basis:
            col = next(i for i, v in enumerate(row) if v != 0)
            if rest[col] % row[col] != 0:
                return False
            q = rest[col] // row[col]
            rest = [a - q * b for a, b in zip(rest, row)]
        return not any(rest)

    def to_json(self) -> list[list[int]]:
        return [list(r) for r in self.basis]


def lattice_points(d: int, bound: float) -> list[Row]:
    """All nonzero integer vectors with Euclidean norm <= bound."""
    r = int(math.floor(bound + NORM_SLACK))
    limit = bound * bound * (1.0 + NORM_SLACK)
    return [
        k for k in itertools.product(range(-r, r + 1), repeat=d)
        if any(k) and sum(v * v for v in k) <= limit
    ]


def _sign_canonical(k: Row) -> Row:
    first = next(v for v in k if v != 0)
    return k if first > 0 else tuple(-v for v in k)


@lru_cache(maxsize=256)
def _enumerate_cached(n: int, bound: float, d: int, cap: int) -> tuple[ResonanceLattice, ...]:
    vectors = sorted({_sign_canonical(k) for k in lattice_points(d, bound)})
    if n == 1:
        prim = [k for k in vectors if math.gcd(*k) == 1]
        return tuple(ResonanceLattice(d, (k,), euclidean_norm(k)) for k in prim)

    combos = math.comb(len(vectors), n)
    if combos > cap:
        raise EnumerationCapError(
            f"Enumerating rank-{n} lattices with bound {bound} in d={d} needs {combos} basis tuples", cap
        )
    found: dict[tuple[Row, ...], float] = {}
    for tup in itertools.combinations(vectors, n):
        if np.linalg.matrix_rank(np.array(tup, dtype=float)) < n:
            continue
        basis = hermite_normal_form(tup)
        norm = max(euclidean_norm(v) for v in tup)
        if basis not in found or norm < found[basis]:
            found[basis] = norm
    logger.debug("enumerated %d rank-%d lattices from %d tuples", len(found), n, combos)
    return tuple(ResonanceLattice(d, b, found[b]) for b in sorted(found))


def enumerate_lattices(n: int, bound: float, d: int, cap: int | None = None) -> list[ResonanceLattice]:
    """
    All distinct rank-n sub-lattices of Z^d admitting a basis of vectors with
    Euclidean norm <= bound, each once in canonical form.
    """
    settings = get_settings()
    if not 1 <= n <= d:
        raise ValueError(f"Lattice rank must satisfy 1 <= n <= d={d}, got {n}")
    if bound < 1.0:
        raise ValueError(f"Lattice bound must be >= 1, got {bound}")
    if bound > settings.lattice_bound_cap:
        raise EnumerationCapError(f"Lattice bound {bound} exceeds the bound cap", settings.lattice_bound_cap)
    cap = settings.enumeration_cap if cap is None else cap
    return list(_enumerate_cached(n, float(bound), d, cap))
