# src/averaging/cutoff.py
from dataclasses import dataclass

import numpy as np


def _mollifier(v: np.ndarray) -> np.ndarray:
    """s(v) = exp(-1/v) for v > 0, else 0."""
    out = np.zeros_like(v, dtype=float)
    mask = v > 0.0
    out[mask] = np.exp(-1.0 / v[mask])
    return out


def _as_output(values: np.ndarray, scalar: bool):
    return float(values) if scalar else values


@dataclass(frozen=True)
class CutoffSpec:
    """
    Smooth even cutoff built from the exponential mollifier.

    chi == 1 on |t| <= plateau, chi == 0 on |t| >= support, and in between
    chi(t) = step(u) with u = (|t| - plateau) / (support - plateau) and
    step(u) = s(1-u) / (s(1-u) + s(u)).
    """

    plateau: float = 0.5
    support: float = 1.0

    def _transition(self, at: np.ndarray) -> np.ndarray:
        return (at > self.plateau) & (at < self.support)

    def _u(self, at: np.ndarray) -> np.ndarray:
        return (at - self.plateau) / (self.support - self.plateau)

    def chi(self, t):
        scalar = np.ndim(t) == 0
        at = np.abs(np.atleast_1d(np.asarray(t, dtype=float)))
        out = np.where(at <= self.plateau, 1.0, 0.0)
        mid = self._transition(at)
        if np.any(mid):
            u = self._u(at[mid])
            a = _mollifier(1.0 - u)
            b = _mollifier(u)
            out[mid] = a / (a + b)
        return _as_output(out.reshape(np.shape(t)), scalar)

    def chi_prime(self, t):
        scalar = np.ndim(t) == 0
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        at = np.abs(tt)
        out = np.zeros_like(at)
        mid = self._transition(at)
        if np.any(mid):
            u = self._u(at[mid])
            a = _mollifier(1.0 - u)
            b = _mollifier(u)
            dstep = -(a * b) / (a + b) ** 2 * (1.0 / (1.0 - u) ** 2 + 1.0 / u**2)
            out[mid] = dstep * np.sign(tt[mid]) / (self.support - self.plateau)
        return _as_output(out.reshape(np.shape(t)), scalar)

    def phi(self, t):
        """(1 - chi(t)) / t, extended by 0 on the plateau (in particular phi(0) = 0)."""
        scalar = np.ndim(t) == 0
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros_like(tt)
        live = np.abs(tt) > self.plateau
        if np.any(live):
            out[live] = (1.0 - self.chi(tt[live])) / tt[live]
        return _as_output(out.reshape(np.shape(t)), scalar)

    def phi_prime(self, t):
        scalar = np.ndim(t) == 0
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros_like(tt)
        live = np.abs(tt) > self.plateau
        if np.any(live):
            tl = tt[live]
            out[live] = -self.chi_prime(tl) / tl - (1.0 - self.chi(tl)) / tl**2
        return _as_output(out.reshape(np.shape(t)), scalar)


DEFAULT_CUTOFF = CutoffSpec()


def chi(t):
    return DEFAULT_CUTOFF.chi(t)


def phi(t):
    return DEFAULT_CUTOFF.phi(t)


# profile name -> (value, first derivative); consumed by coefficient compositions
PROFILES = {
    "chi": (DEFAULT_CUTOFF.chi, DEFAULT_CUTOFF.chi_prime),
    "phi": (DEFAULT_CUTOFF.phi, DEFAULT_CUTOFF.phi_prime),
}
