# src/geometry/volumes.py
"""Monte Carlo estimates of resonance-zone and block volumes, with a slab-union cross-check in d=2."""
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Literal, Sequence

import numpy as np
from langfuse import get_client, observe
from scipy import integrate, stats

from core.fitting import SlopeFit, fit_loglog_slope
from geometry.hamiltonian import Hamiltonian
from geometry.zones import in_zone_star, zone_lattices

logger = logging.getLogger(__name__)

BATCH = 250_000
VolumeKind = Literal["block", "zone"]


@dataclass(frozen=True)
class BoxWindow:
    center: tuple[float, ...]
    half_width: float

    kind = "box"

    @property
    def d(self) -> int:
        return len(self.center)

    def volume(self) -> float:
        return (2.0 * self.half_width) ** self.d

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        c = np.asarray(self.center, dtype=float)
        return c + rng.uniform(-self.half_width, self.half_width, size=(size, self.d))

    def describe(self) -> dict:
        return {"kind": self.kind, "center": list(self.center), "half_width": self.half_width}


@dataclass(frozen=True)
class ShellWindow:
    """Spherical shell r_in <= |xi - center| <= r_out; an annulus when d=2."""

    d: int
    r_in: float
    r_out: float
    center: tuple[float, ...] | None = None

    kind = "annulus"

    def __post_init__(self):
        if not 0 <= self.r_in < self.r_out:
            raise ValueError(f"Shell radii must satisfy 0 <= r_in < r_out, got {self.r_in}, {self.r_out}")

    def volume(self) -> float:
        ball = math.pi ** (self.d / 2) / math.gamma(self.d / 2 + 1)
        return ball * (self.r_out**self.d - self.r_in**self.d)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        directions = rng.standard_normal((size, self.d))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        u = rng.uniform(0.0, 1.0, size)
        radii = (self.r_in**self.d + u * (self.r_out**self.d - self.r_in**self.d)) ** (1.0 / self.d)
        c = np.zeros(self.d) if self.center is None else np.asarray(self.center, dtype=float)
        return c + directions * radii[:, None]

    def describe(self) -> dict:
        return {"kind": self.kind, "r_in": self.r_in, "r_out": self.r_out, "center": self.center}


Window = BoxWindow | ShellWindow


@dataclass
class ZoneVolumeEstimate:
    n: int
    kind: str
    window: dict
    hbar: float
    gamma: float
    delta: float
    samples: int
    hits: int
    estimate: float
    ci95: tuple[float, float]
    seed: int

    def row(self) -> dict:
        return {
            "hbar": self.hbar,
            "n": self.n,
            "samples": self.samples,
            "hits": self.hits,
            "estimate": self.estimate,
            "ci_lo": self.ci95[0],
            "ci_hi": self.ci95[1],
            "seed": self.seed,
        }


@dataclass
class VolumeSweep:
    n: int
    estimates: list[ZoneVolumeEstimate]
    fit: SlopeFit
    lower_bound_only: bool = False
    reference_exponent: float = 0.0
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "fit": self.fit.to_dict(),
            "lower_bound_only": self.lower_bound_only,
            "reference_exponent": self.reference_exponent,
            "estimates": [asdict(e) for e in self.estimates],
            "notes": list(self.notes),
        }


def wilson_interval(hits: int, samples: int) -> tuple[float, float]:
    ci = stats.binomtest(hits, samples).proportion_ci(confidence_level=0.95, method="wilson")
    return float(ci.low), float(ci.high)


def membership(points: np.ndarray, n: int, H: Hamiltonian, kind: VolumeKind = "block") -> np.ndarray:
    """Z_n^* membership, or B_n^* = Z_n^* minus Z_{n+1}^* for kind='block'."""
    inside = in_zone_star(points, n, H)
    if kind == "block":
        inside &= ~in_zone_star(points, n + 1, H)
    elif kind != "zone":
        raise ValueError(f"Unknown volume kind: {kind}")
    return inside


def estimate_volume(
    n: int,
    window: Window,
    H: Hamiltonian,
    samples: int,
    seed: int,
    kind: VolumeKind = "block",
    stream: np.random.SeedSequence | None = None,
) -> ZoneVolumeEstimate:
    """Relative volume of the zone or block union of order n inside the window, at H's hbar."""
    if samples < 1:
        raise ValueError(f"Monte Carlo needs at least one sample, got {samples}")
    if window.d != H.ctx.d:
        raise ValueError(f"Window dimension {window.d} does not match d={H.ctx.d}")
    rng = np.random.default_rng(stream if stream is not None else np.random.SeedSequence(seed))
    hits = 0
    remaining = samples
    while remaining:
        size = min(BATCH, remaining)
        hits += int(np.count_nonzero(membership(window.sample(rng, size), n, H, kind)))
        remaining -= size
    ctx = H.ctx
    return ZoneVolumeEstimate(
        n=n,
        kind=kind,
        window=window.describe(),
        hbar=ctx.hbar,
        gamma=ctx.gamma,
        delta=ctx.delta,
        samples=samples,
        hits=hits,
        estimate=hits / samples,
        ci95=wilson_interval(hits, samples),
        seed=seed,
    )


@observe(capture_input=False, capture_output=False)
def mc_volume(
    n: int,
    window: Window,
    H: Hamiltonian,
    hbars: Sequence[float],
    samples: int,
    seed: int,
    kind: VolumeKind = "block",
) -> VolumeSweep:
    """
    Sweep `estimate_volume` over hbars and fit the exponent of the estimate
    against hbar. Each hbar draws from its own substream of `seed`.
    """
    ctx = H.ctx
    if not ctx.delta > 2 * ctx.d * ctx.gamma:
        raise ValueError(f"delta > 2*d*gamma violated (delta={ctx.delta}, d={ctx.d}, gamma={ctx.gamma})")
    if samples < 1:
        raise ValueError(f"Monte Carlo needs at least one sample, got {samples}")
    streams = np.random.SeedSequence(seed).spawn(len(hbars))
    estimates = [
        estimate_volume(n, window, H.with_hbar(h), samples, seed, kind, stream)
        for h, stream in zip(hbars, streams)
    ]
    fit = fit_loglog_slope(hbars, [e.estimate for e in estimates], floor=0.0)
    sweep = VolumeSweep(n, estimates, fit, reference_exponent=n * (ctx.delta - 2 * ctx.d * ctx.gamma))
    smallest = min(estimates, key=lambda e: e.hbar)
    if smallest.hits == 0:
        sweep.lower_bound_only = True
        sweep.notes.append(f"no hits at hbar={smallest.hbar}; exponent is a lower bound")
        logger.info("zero hits at hbar=%s for n=%d", smallest.hbar, n)
    get_client().update_current_span(output={"n": n, "slope": fit.slope, "lower_bound_only": sweep.lower_bound_only})
    return sweep


# === Slab union (d = 2, quadratic H) ===

def _union_length(intervals: list[tuple[float, float]]) -> float:
    total, reach = 0.0, -math.inf
    for lo, hi in sorted(intervals):
        if hi <= reach:
            continue
        total += hi - max(lo, reach)
        reach = hi
    return total


def slab_union_fraction(H: Hamiltonian, window: BoxWindow) -> float:
    """
    Exact relative area of Z_1^* inside a box for d=2 and quadratic H.

    Each order-one zone is the slab |<M k, xi> + <b, k>| < 2 hbar^(delta - gamma);
    the union is integrated column by column, each column a union of intervals.
    """
    ctx = H.ctx
    if ctx.d != 2 or not isinstance(window, BoxWindow):
        raise ValueError("Slab union is only available for d=2 box windows")
    if H.name not in ("quadratic", "free"):
        raise ValueError(f"Slab union needs a quadratic Hamiltonian, got {H.name}")
    M = np.asarray(H.params["matrix"], dtype=float)
    b = np.asarray(H.params["linear"], dtype=float)
    width = 2.0 * ctx.hbar ** (ctx.delta - ctx.gamma)
    slabs = []
    for R in zone_lattices(1, ctx):
        k = R.basis_array[0]
        slabs.append((M @ k, float(b @ k)))

    (x0, y0), hw = window.center, window.half_width
    ylo, yhi = y0 - hw, y0 + hw
    breaks = set()

    def column(x: float) -> float:
        intervals = []
        for a, c in slabs:
            if a[1] == 0.0:
                if abs(a[0] * x + c) < width:
                    return yhi - ylo
                continue
            ends = sorted(((-width - c - a[0] * x) / a[1], (width - c - a[0] * x) / a[1]))
            lo, hi = max(ends[0], ylo), min(ends[1], yhi)
            if hi > lo:
                intervals.append((lo, hi))
        return _union_length(intervals)

    for a, c in slabs:
        if a[1] == 0.0:
            if a[0] != 0.0:
                breaks.update(((-width - c) / a[0], (width - c) / a[0]))
            continue
        if a[0] != 0.0:
            for edge in (ylo, yhi):
                for w in (-width, width):
                    breaks.add((w - c - a[1] * edge) / a[0])
    points = sorted(p for p in breaks if x0 - hw < p < x0 + hw)
    area, _ = integrate.quad(column, x0 - hw, x0 + hw, points=points or None, limit=500)
    return area / window.volume()
