# src/calculus/grids.py
import itertools
import threading
import weakref
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from core.settings import get_settings


@dataclass(frozen=True)
class SampleGrid:
    """
    Tensor grids on the torus (x) and on a momentum window (xi).

    x-points are uniform on [0, 2*pi)^d; xi-points are uniform on
    [-window, window]^d, endpoints included.
    """

    d: int
    n_x: int = 17
    n_xi: int = 33
    window: float = 2.0
    _local: threading.local = field(default_factory=threading.local, repr=False, compare=False)

    @cached_property
    def x_points(self) -> np.ndarray:
        axis = 2.0 * np.pi * np.arange(self.n_x) / self.n_x
        return np.array(list(itertools.product(axis, repeat=self.d)), dtype=float)

    @cached_property
    def xi_points(self) -> np.ndarray:
        axis = np.linspace(-self.window, self.window, self.n_xi)
        return np.array(list(itertools.product(axis, repeat=self.d)), dtype=float)

    @property
    def store(self) -> weakref.WeakKeyDictionary:
        """Per-thread cache of coefficient values on xi_points, keyed by node."""
        cache = getattr(self._local, "store", None)
        if cache is None:
            cache = weakref.WeakKeyDictionary()
            self._local.store = cache
        return cache


_GRIDS: dict[tuple, SampleGrid] = {}
_GRIDS_LOCK = threading.Lock()


def standard_grid(d: int) -> SampleGrid:
    """The validation grid for dimension d, built from the current settings."""
    settings = get_settings()
    key = (d, settings.grid_x_points, settings.grid_xi_points, settings.xi_window)
    with _GRIDS_LOCK:
        grid = _GRIDS.get(key)
        if grid is None:
            grid = SampleGrid(d, settings.grid_x_points, settings.grid_xi_points, settings.xi_window)
            _GRIDS[key] = grid
    return grid
