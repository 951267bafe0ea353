# src/calculus/coefficients.py
"""
Expression trees for momentum-space coefficient fields xi -> C.

Nodes are immutable and shared by reference, so an expression built by
repeated symbol algebra is a DAG. Evaluation walks the DAG once per
(node, accumulated shift) pair through a FieldEvaluator cache; shifts are
exact because they only move the evaluation points.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from numbers import Number
from typing import Callable, Sequence

import numpy as np

from averaging.cutoff import PROFILES
from core.errors import DerivativeUnavailableError

logger = logging.getLogger(__name__)

Offset = tuple[float, ...]


class CoefficientField:
    """Base class of every coefficient-field node."""

    children: tuple["CoefficientField", ...] = ()

    # --- evaluation ---

    def evaluate(self, xi) -> np.ndarray | complex:
        xi_arr = np.asarray(xi, dtype=float)
        single = xi_arr.ndim == 1
        values = FieldEvaluator(np.atleast_2d(xi_arr)).evaluate(self)
        return complex(values[0]) if single else values

    def _evaluate(self, ev: "FieldEvaluator", offset: Offset) -> np.ndarray:
        raise NotImplementedError

    def _derivative(self, axis: int, fd_step: float, recurse: Callable) -> "CoefficientField":
        raise NotImplementedError

    def is_zero(self) -> bool:
        return False

    # --- arithmetic sugar ---

    def __add__(self, other):
        return combine([(1.0, self), (1.0, as_field(other))])

    __radd__ = __add__

    def __sub__(self, other):
        return combine([(1.0, self), (-1.0, as_field(other))])

    def __rsub__(self, other):
        return combine([(1.0, as_field(other)), (-1.0, self)])

    def __mul__(self, other):
        if isinstance(other, Number):
            return scale(other, self)
        return multiply(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        return scale(-1.0, self)


# === Primitive nodes ===

@dataclass(frozen=True, eq=False)
class Constant(CoefficientField):
    value: complex

    def _evaluate(self, ev, offset):
        return np.full(ev.size, self.value, dtype=complex)

    def _derivative(self, axis, fd_step, recurse):
        return ZERO

    def is_zero(self) -> bool:
        return self.value == 0


ZERO = Constant(0j)
ONE = Constant(1 + 0j)


@dataclass(frozen=True, eq=False)
class Polynomial(CoefficientField):
    """c + <b, xi> + <xi, Q xi> with complex c, b and real-or-complex Q."""

    constant: complex
    linear: tuple[complex, ...]
    quadratic: tuple[tuple[complex, ...], ...]

    def _evaluate(self, ev, offset):
        pts = ev.points(offset)
        b = np.asarray(self.linear, dtype=complex)
        q = np.asarray(self.quadratic, dtype=complex)
        return self.constant + pts @ b + np.einsum("ni,ij,nj->n", pts, q, pts)

    def _derivative(self, axis, fd_step, recurse):
        q = np.asarray(self.quadratic, dtype=complex)
        grad_row = q[axis, :] + q[:, axis]
        d = len(self.linear)
        return polynomial(d, c=self.linear[axis], b=grad_row)


@dataclass(frozen=True, eq=False)
class Harmonic(CoefficientField):
    """amplitude * cos(<frequency, xi> + phase)."""

    amplitude: complex
    frequency: tuple[float, ...]
    phase: float

    def _evaluate(self, ev, offset):
        pts = ev.points(offset)
        return self.amplitude * np.cos(pts @ np.asarray(self.frequency) + self.phase)

    def _derivative(self, axis, fd_step, recurse):
        w = self.frequency[axis]
        if w == 0:
            return ZERO
        return Harmonic(self.amplitude * w, self.frequency, self.phase + math.pi / 2)


# === Composite nodes ===

@dataclass(frozen=True, eq=False)
class LinearCombination(CoefficientField):
    terms: tuple[tuple[complex, CoefficientField], ...]

    @property
    def children(self):
        return tuple(f for _, f in self.terms)

    def _evaluate(self, ev, offset):
        out = np.zeros(ev.size, dtype=complex)
        for c, f in self.terms:
            out += c * ev.value(f, offset)
        return out

    def _derivative(self, axis, fd_step, recurse):
        return combine([(c, recurse(f)) for c, f in self.terms])


@dataclass(frozen=True, eq=False)
class Product(CoefficientField):
    factors: tuple[CoefficientField, ...]

    @property
    def children(self):
        return self.factors

    def _evaluate(self, ev, offset):
        out = ev.value(self.factors[0], offset).copy()
        for f in self.factors[1:]:
            out *= ev.value(f, offset)
        return out

    def _derivative(self, axis, fd_step, recurse):
        terms = []
        for i, f in enumerate(self.factors):
            df = recurse(f)
            if df.is_zero():
                continue
            terms.append((1.0, multiply(*self.factors[:i], df, *self.factors[i + 1:])))
        return combine(terms)


@dataclass(frozen=True, eq=False)
class Conjugate(CoefficientField):
    inner: CoefficientField

    @property
    def children(self):
        return (self.inner,)

    def _evaluate(self, ev, offset):
        return np.conj(ev.value(self.inner, offset))

    def _derivative(self, axis, fd_step, recurse):
        return conjugate(recurse(self.inner))


@dataclass(frozen=True, eq=False)
class Shift(CoefficientField):
    """xi -> inner(xi + offset)."""

    inner: CoefficientField
    offset: Offset

    @property
    def children(self):
        return (self.inner,)

    def _evaluate(self, ev, offset):
        moved = tuple(a + b for a, b in zip(offset, self.offset))
        return ev.value(self.inner, moved)

    def _derivative(self, axis, fd_step, recurse):
        return shift(recurse(self.inner), self.offset)


@dataclass(frozen=True, eq=False)
class Composition(CoefficientField):
    """profile^(order)(Re inner(xi)) for a registered real profile (chi or phi)."""

    profile: str
    order: int
    inner: CoefficientField

    @property
    def children(self):
        return (self.inner,)

    def _evaluate(self, ev, offset):
        t = ev.value(self.inner, offset).real
        return PROFILES[self.profile][self.order](t).astype(complex)

    def _derivative(self, axis, fd_step, recurse):
        if self.order == 0:
            return multiply(Composition(self.profile, 1, self.inner), recurse(self.inner))
        return FiniteDifference(self, (axis,), fd_step)


@dataclass(frozen=True, eq=False)
class FiniteDifference(CoefficientField):
    """Fourth-order central difference of inner along the listed axes (at most two)."""

    inner: CoefficientField
    axes: tuple[int, ...]
    step: float

    MAX_AXES = 2

    @property
    def children(self):
        return (self.inner,)

    def _evaluate(self, ev, offset):
        return self._stencil(ev, offset, self.axes)

    def _stencil(self, ev, offset, axes):
        if not axes:
            return ev.value(self.inner, offset)
        j, rest = axes[0], axes[1:]
        h = self.step
        out = np.zeros(ev.size, dtype=complex)
        for m, w in ((2, -1.0), (1, 8.0), (-1, -8.0), (-2, 1.0)):
            moved = tuple(o + (m * h if i == j else 0.0) for i, o in enumerate(offset))
            out += w * self._stencil(ev, moved, rest)
        return out / (12.0 * h)

    def _derivative(self, axis, fd_step, recurse):
        if len(self.axes) >= self.MAX_AXES:
            raise DerivativeUnavailableError(
                f"Numerical derivative order {len(self.axes) + 1} requested; at most {self.MAX_AXES} supported"
            )
        return FiniteDifference(self.inner, self.axes + (axis,), self.step)


# === Builders ===

def as_field(value) -> CoefficientField:
    if isinstance(value, CoefficientField):
        return value
    if isinstance(value, Number):
        return constant(value)
    raise TypeError(f"Cannot convert {type(value).__name__} to a coefficient field")


def constant(value: complex) -> CoefficientField:
    value = complex(value)
    return ZERO if value == 0 else Constant(value)


def polynomial(
    d: int,
    c: complex = 0.0,
    b: Sequence[complex] | None = None,
    q=None,
) -> CoefficientField:
    """c + <b, xi> + <xi, q xi>; collapses to a constant when b and q vanish."""
    b = np.zeros(d, dtype=complex) if b is None else np.asarray(b, dtype=complex)
    q = np.zeros((d, d), dtype=complex) if q is None else np.asarray(q, dtype=complex)
    if b.shape != (d,) or q.shape != (d, d):
        raise ValueError(f"Polynomial coefficients do not match dimension d={d}")
    if not np.any(b) and not np.any(q):
        return constant(c)
    return Polynomial(
        complex(c),
        tuple(complex(x) for x in b),
        tuple(tuple(complex(x) for x in row) for row in q),
    )


def cosine(frequency: Sequence[float], amplitude: complex = 1.0, phase: float = 0.0) -> CoefficientField:
    if complex(amplitude) == 0:
        return ZERO
    return Harmonic(complex(amplitude), tuple(float(w) for w in frequency), float(phase))


def sine(frequency: Sequence[float], amplitude: complex = 1.0) -> CoefficientField:
    return cosine(frequency, amplitude, -math.pi / 2)


def combine(terms: Sequence[tuple[complex, CoefficientField]]) -> CoefficientField:
    """Sum of scalar multiples, flattened and merged by node identity."""
    merged: dict[int, list] = {}
    const = 0j

    def add(c: complex, f: CoefficientField) -> None:
        nonlocal const
        if c == 0 or f.is_zero():
            return
        if isinstance(f, Constant):
            const += c * f.value
        elif isinstance(f, LinearCombination):
            for c2, g in f.terms:
                add(c * c2, g)
        else:
            slot = merged.setdefault(id(f), [0j, f])
            slot[0] += c

    for c, f in terms:
        add(complex(c), f)
    out = [(c, f) for c, f in merged.values() if c != 0]
    if const != 0:
        out.append((const, ONE))
    if not out:
        return ZERO
    if len(out) == 1:
        c, f = out[0]
        if c == 1:
            return f
        if f is ONE:
            return Constant(c)
    return LinearCombination(tuple(out))


def scale(c: complex, f: CoefficientField) -> CoefficientField:
    return combine([(c, f)])


def multiply(*factors) -> CoefficientField:
    fields = [as_field(f) for f in factors]
    coef = 1 + 0j
    flat: list[CoefficientField] = []
    for f in fields:
        if f.is_zero():
            return ZERO
        if isinstance(f, Constant):
            coef *= f.value
        elif isinstance(f, Product):
            flat.extend(f.factors)
        elif isinstance(f, LinearCombination) and len(f.terms) == 1:
            c, g = f.terms[0]
            coef *= c
            flat.extend(g.factors if isinstance(g, Product) else (g,))
        else:
            flat.append(f)
    if not flat:
        return constant(coef)
    core = flat[0] if len(flat) == 1 else Product(tuple(flat))
    return scale(coef, core)


def conjugate(f: CoefficientField) -> CoefficientField:
    if isinstance(f, Constant):
        return constant(np.conj(f.value))
    if isinstance(f, Conjugate):
        return f.inner
    if isinstance(f, Composition):
        # profiles are real on real arguments
        return f
    return Conjugate(f)


def shift(f: CoefficientField, offset: Sequence[float]) -> CoefficientField:
    offset = tuple(float(v) for v in offset)
    if isinstance(f, Constant) or not any(offset):
        return f
    if isinstance(f, Shift):
        total = tuple(a + b for a, b in zip(f.offset, offset))
        return f.inner if not any(total) else Shift(f.inner, total)
    return Shift(f, offset)


def compose(profile: str, inner: CoefficientField) -> CoefficientField:
    if profile not in PROFILES:
        raise ValueError(f"Unknown profile: {profile}")
    return Composition(profile, 0, inner)


def derivative(f: CoefficientField, axis: int, fd_step: float = 1e-5, order: int = 1) -> CoefficientField:
    """xi-derivative of order `order` along one axis; memoized across the shared DAG."""
    out = f
    for _ in range(order):
        memo: dict[int, CoefficientField] = {}

        def recurse(node: CoefficientField) -> CoefficientField:
            key = id(node)
            if key not in memo:
                memo[key] = node._derivative(axis, fd_step, recurse)
            return memo[key]

        out = recurse(out)
    return out


def multi_derivative(f: CoefficientField, beta: Sequence[int], fd_step: float = 1e-5) -> CoefficientField:
    """d_xi^beta f for a multi-index beta."""
    out = f
    for axis, count in enumerate(beta):
        if count:
            out = derivative(out, axis, fd_step, order=count)
    return out


# === Evaluation ===

class FieldEvaluator:
    """
    Evaluates many fields at the same base points, sharing one cache keyed by
    (node identity, accumulated shift).
    """

    def __init__(self, xi: np.ndarray, store=None):
        self.xi = np.asarray(xi, dtype=float)
        if self.xi.ndim != 2:
            raise ValueError(f"Expected points of shape (n, d), got {self.xi.shape}")
        self.size = self.xi.shape[0]
        self._zero: Offset = (0.0,) * self.xi.shape[1]
        self._points: dict[Offset, np.ndarray] = {}
        self._cache: dict[tuple[int, Offset], np.ndarray] = {}
        # optional long-lived node -> {offset: values} mapping for a fixed grid
        self._store = store

    def points(self, offset: Offset) -> np.ndarray:
        pts = self._points.get(offset)
        if pts is None:
            pts = self.xi + np.asarray(offset)
            self._points[offset] = pts
        return pts

    def value(self, node: CoefficientField, offset: Offset) -> np.ndarray:
        if self._store is not None:
            per_node = self._store.get(node)
            if per_node is None:
                per_node = {}
                self._store[node] = per_node
            out = per_node.get(offset)
            if out is None:
                out = node._evaluate(self, offset)
                per_node[offset] = out
            return out
        key = (id(node), offset)
        out = self._cache.get(key)
        if out is None:
            out = node._evaluate(self, offset)
            self._cache[key] = out
        return out

    def evaluate(self, node: CoefficientField) -> np.ndarray:
        return self.value(node, self._zero)

    def evaluate_many(self, nodes: Sequence[CoefficientField]) -> list[np.ndarray]:
        return [self.evaluate(n) for n in nodes]


def sup_norm(f: CoefficientField, xi: np.ndarray) -> float:
    values = FieldEvaluator(xi).evaluate(f)
    return float(np.max(np.abs(values))) if values.size else 0.0


def count_nodes(roots: Sequence[CoefficientField]) -> int:
    """Number of distinct nodes reachable from the roots."""
    seen: set[int] = set()
    stack = list(roots)
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.extend(node.children)
    return len(seen)
