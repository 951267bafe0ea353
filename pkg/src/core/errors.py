# src/core/errors.py


class SupportOverflowError(RuntimeError):
    """Raised when a symbol's Fourier support would exceed the configured cap K_max."""

    def __init__(self, radius: int, cap: int, step: str | None = None):
        self.radius = radius
        self.cap = cap
        self.step = step
        where = f" at {step}" if step else ""
        super().__init__(
            f"Support radius {radius} exceeds cap K_max={cap}{where}; truncation would be required"
        )


class DerivativeUnavailableError(ValueError):
    """Raised when a coefficient field cannot provide a requested xi-derivative."""


class NotSelfAdjointError(ValueError):
    """Raised when an operation requires a self-adjoint symbol or Hermitian matrix."""


class ResonantSiteError(ValueError):
    """Raised when a lattice site hbar*k lies in a resonance zone."""


class EnumerationCapError(RuntimeError):
    """Raised when lattice enumeration would exceed the configured combinatorial cap."""

    def __init__(self, message: str, cap: float):
        self.cap = cap
        super().__init__(f"{message} (cap={cap})")


class BasisTooSmallError(ValueError):
    """Raised when a truncated Fourier basis cannot hold a symbol or a quasimode site."""
