import os

os.environ.setdefault("LANGFUSE_TRACING_ENABLED", "false")

import pytest

from calculus.symbols import trigonometric
from core.context import SemiclassicalContext
from geometry.hamiltonian import free

HBAR = 2.0**-4


@pytest.fixture
def ctx1():
    """d=1 preset at hbar = 1/16: zone |xi| < 1 around the single order-one resonance."""
    return SemiclassicalContext(d=1, hbar=HBAR, kappa=2.0, gamma=0.05, delta=0.3)


@pytest.fixture
def ctx2():
    return SemiclassicalContext(d=2, hbar=HBAR, kappa=2.0, gamma=0.05, delta=0.3)


@pytest.fixture
def H1(ctx1):
    """H = xi^2 / 2 in d=1."""
    return free(ctx1)


@pytest.fixture
def H2(ctx2):
    return free(ctx2)


@pytest.fixture
def cos_perturbation(ctx1):
    """K0 = 2 cos x."""
    return trigonometric(ctx1, {(1,): 1.0, (-1,): 1.0})
