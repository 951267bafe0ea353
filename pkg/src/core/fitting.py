# src/core/fitting.py
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

EXACT_FLOOR = 1e-15


@dataclass(frozen=True)
class SlopeFit:
    """
    Least-squares line through (log2 hbar, log2 value).

    `exact` marks sweeps where fewer than two values exceed EXACT_FLOOR; the
    slope is then +inf and passes any lower-bound check.
    """

    slope: float
    intercept: float
    residual: float
    points: int
    exact: bool = False
    excluded: tuple[float, ...] = field(default_factory=tuple)

    def at_least(self, threshold: float) -> bool:
        return self.exact or self.slope >= threshold

    def within(self, target: float, tol: float) -> bool:
        return (not self.exact) and abs(self.slope - target) <= tol

    def to_dict(self) -> dict:
        return {
            "slope": None if math.isinf(self.slope) else self.slope,
            "intercept": None if math.isinf(self.intercept) else self.intercept,
            "residual": self.residual,
            "points": self.points,
            "exact": self.exact,
            "excluded_hbars": list(self.excluded),
        }


def fit_loglog_slope(hbars: Sequence[float], values: Sequence[float], floor: float = EXACT_FLOOR) -> SlopeFit:
    """Fit values ~ C * hbar**slope on log2 scales, skipping values <= floor."""
    hbars = np.asarray(hbars, dtype=float)
    values = np.abs(np.asarray(values, dtype=float))
    if hbars.shape != values.shape:
        raise ValueError(f"hbars and values differ in length: {hbars.size} vs {values.size}")
    usable = values > floor
    excluded = tuple(float(h) for h in hbars[~usable])
    if np.count_nonzero(usable) < 2:
        return SlopeFit(math.inf, math.inf, 0.0, int(np.count_nonzero(usable)), True, excluded)
    lx = np.log2(hbars[usable])
    ly = np.log2(values[usable])
    slope, intercept = np.polyfit(lx, ly, 1)
    residual = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
    return SlopeFit(float(slope), float(intercept), residual, int(lx.size), False, excluded)


def dyadic_sweep(first: int, last: int) -> list[float]:
    """[2**-first, ..., 2**-last]."""
    return [2.0 ** (-p) for p in range(first, last + 1)]
