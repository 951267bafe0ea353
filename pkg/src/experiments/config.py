# src/experiments/config.py
from typing import Literal

from pydantic import BaseModel, Field, model_validator

from calculus.coefficients import CoefficientField, constant, cosine, polynomial
from calculus.symbols import FourierSymbol
from core.context import SemiclassicalContext
from core.fitting import dyadic_sweep
from geometry.hamiltonian import Hamiltonian, free, linear, quadratic
from geometry.volumes import BoxWindow, ShellWindow

ExperimentName = Literal["fkt", "nfcheck", "scaling", "volumes", "blockmap"]
EXPERIMENTS: tuple[str, ...] = ("fkt", "nfcheck", "scaling", "volumes", "blockmap")
U64_MAX = 2**64 - 1


class HamiltonianSpec(BaseModel):
    """Built-in H(xi): quadratic (matrix, linear), free (mass_scale) or linear (omega)."""

    name: Literal["quadratic", "free", "linear"] = "free"
    matrix: list[list[float]] | None = None
    linear: list[float] | None = None
    mass_scale: float = 1.0
    omega: list[float] | None = None

    def build(self, ctx: SemiclassicalContext) -> Hamiltonian:
        if self.name == "free":
            return free(ctx, self.mass_scale)
        if self.name == "linear":
            if self.omega is None:
                raise ValueError("Linear Hamiltonian needs 'omega'")
            return linear(ctx, self.omega)
        if self.matrix is None:
            raise ValueError("Quadratic Hamiltonian needs 'matrix'")
        return quadratic(ctx, self.matrix, self.linear)


class ModeSpec(BaseModel):
    """
    One Fourier mode of the perturbation. The coefficient is a constant
    `value` ([re, im] or real), optionally times a polynomial or cosine in xi.
    """

    k: list[int]
    value: float | list[float] = 1.0
    polynomial: dict | None = None
    cosine: dict | None = None

    def coefficient(self, d: int) -> CoefficientField:
        v = self.value
        field = constant(complex(v[0], v[1]) if isinstance(v, list) else complex(v))
        if self.polynomial is not None:
            field = field * polynomial(d, self.polynomial.get("c", 0.0), self.polynomial.get("b"), self.polynomial.get("q"))
        if self.cosine is not None:
            field = field * cosine(self.cosine["frequency"], self.cosine.get("amplitude", 1.0), self.cosine.get("phase", 0.0))
        return field


class WindowSpec(BaseModel):
    kind: Literal["box", "annulus"] = "box"
    center: list[float] | None = None
    half_width: float = 1.0
    r_in: float = 0.5
    r_out: float = 1.5

    def build(self, d: int) -> BoxWindow | ShellWindow:
        center = tuple(self.center) if self.center is not None else (0.0,) * d
        if len(center) != d:
            raise ValueError(f"Window center {list(center)} does not match dimension d={d}")
        if self.kind == "box":
            return BoxWindow(center, self.half_width)
        return ShellWindow(d, self.r_in, self.r_out, center)


class ExperimentConfig(BaseModel):
    """One experiment run, read from a single JSON file."""

    experiment: ExperimentName | None = None
    d: int = Field(default=1, ge=1)
    kappa: float = 2.0
    gamma: float = 0.05
    delta: float = 0.3
    hbars: list[float] = Field(default_factory=lambda: dyadic_sweep(3, 8), min_length=1)
    hamiltonian: HamiltonianSpec = Field(default_factory=HamiltonianSpec)
    # None means 2 cos(x_1); an empty list means K0 = 0
    perturbation: list[ModeSpec] | None = None
    N: int = Field(default=3, ge=0)
    M: int = Field(default=6, ge=1)
    K_basis: int | None = None
    band_limit: int | None = 8
    seed: int = Field(default=0, ge=0, le=U64_MAX)
    workers: int | None = Field(default=None, ge=1)
    momenta: list[list[float]] | None = None
    window: WindowSpec = Field(default_factory=WindowSpec)
    samples: int = Field(default=100_000, ge=1)
    orders: list[int] = Field(default_factory=lambda: [1])
    volume_kind: Literal["block", "zone"] = "zone"
    exponent_tolerance: float | None = 0.1
    grid_points: int = Field(default=101, ge=2)
    lemma_samples: int = Field(default=1000, ge=0)

    @model_validator(mode="after")
    def _check_contexts(self) -> "ExperimentConfig":
        for h in self.hbars:
            self.context(h)
        for n in self.orders:
            if not 1 <= n <= self.d:
                raise ValueError(f"Volume order must satisfy 1 <= n <= d={self.d}, got {n}")
        for mode in self.perturbation or []:
            if len(mode.k) != self.d:
                raise ValueError(f"Perturbation mode {mode.k} does not match dimension d={self.d}")
        return self

    def context(self, hbar: float) -> SemiclassicalContext:
        return SemiclassicalContext(d=self.d, hbar=hbar, kappa=self.kappa, gamma=self.gamma, delta=self.delta)

    @property
    def basis_size(self) -> int:
        if self.K_basis is not None:
            return self.K_basis
        return 64 if self.d == 1 else 24

    @property
    def site_momenta(self) -> list[list[float]]:
        if self.momenta is not None:
            return self.momenta
        return [[1.5]] if self.d == 1 else [[1.5, 3.0] + [4.5] * (self.d - 2)]

    def build_hamiltonian(self, hbar: float) -> Hamiltonian:
        return self.hamiltonian.build(self.context(hbar))

    def build_perturbation(self, hbar: float) -> FourierSymbol:
        ctx = self.context(hbar)
        if self.perturbation is None:
            e1 = tuple([1] + [0] * (self.d - 1))
            minus = tuple(-v for v in e1)
            return FourierSymbol(ctx, {e1: constant(1.0), minus: constant(1.0)})
        return FourierSymbol(ctx, {tuple(m.k): m.coefficient(self.d) for m in self.perturbation})
