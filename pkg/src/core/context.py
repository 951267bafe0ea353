# src/core/context.py
from pydantic import BaseModel, ConfigDict, Field, model_validator


class SemiclassicalContext(BaseModel):
    """
    Dimension and exponents shared by every symbol of a computation.

    alpha = min(1 - delta, kappa - 3*delta) is derived on access and never stored.
    """

    model_config = ConfigDict(frozen=True)

    d: int = Field(ge=1)
    hbar: float
    kappa: float
    gamma: float = Field(default=0.0, ge=0.0)
    delta: float = Field(default=0.0, ge=0.0)

    @model_validator(mode="after")
    def _check_exponents(self) -> "SemiclassicalContext":
        if not 0.0 < self.hbar <= 1.0:
            raise ValueError(f"0 < hbar <= 1 violated (hbar={self.hbar})")
        if not self.kappa > 0.0:
            raise ValueError(f"kappa > 0 violated (kappa={self.kappa})")
        if not self.delta < 1.0 - self.gamma:
            raise ValueError(f"delta < 1 - gamma violated (delta={self.delta}, gamma={self.gamma})")
        if not self.delta < self.kappa / 3.0:
            raise ValueError(f"delta < kappa/3 violated (delta={self.delta}, kappa={self.kappa})")
        return self

    @property
    def alpha(self) -> float:
        return min(1.0 - self.delta, self.kappa - 3.0 * self.delta)

    @property
    def hdelta(self) -> float:
        """Zone width scale hbar**delta."""
        return self.hbar ** self.delta

    @property
    def resonance_bound(self) -> float:
        """Largest admissible |k| for resonance lattices, hbar**(-gamma)."""
        return self.hbar ** (-self.gamma)

    @property
    def fd_step(self) -> float:
        """Step for finite-difference derivative fallbacks."""
        return max(1e-5, self.hdelta * 1e-3)

    def with_hbar(self, hbar: float) -> "SemiclassicalContext":
        # model_copy skips validation, so rebuild
        return SemiclassicalContext(
            d=self.d, hbar=hbar, kappa=self.kappa, gamma=self.gamma, delta=self.delta
        )


def default_context(hbar: float, d: int = 2) -> SemiclassicalContext:
    """Preset d=2, kappa=2, delta=0.3, gamma=0.05, which also satisfies delta > 2*d*gamma."""
    return SemiclassicalContext(d=d, hbar=hbar, kappa=2.0, gamma=0.05, delta=0.3)
