import pytest

from averaging.homological import (
    hdelta_average,
    homological_residual,
    selfadjoint_hdelta_average,
    selfadjoint_homological,
    small_divisor_argument,
    solve_homological,
)
from calculus.symbols import is_self_adjoint, trigonometric
from core.errors import NotSelfAdjointError


def test_small_divisor_argument_is_shared(H1):
    """t_k is built once per mode and hbar^delta."""
    node = small_divisor_argument(H1, (1,))
    assert small_divisor_argument(H1, (1,)) is node
    assert node.evaluate([H1.ctx.hdelta]) == pytest.approx(1.0)


def test_average_keeps_resonant_part(H1, cos_perturbation):
    """chi(t_k) is 1 near Omega_k = 0 and 0 far from it."""
    A = hdelta_average(cos_perturbation, H1)
    assert A.coefficient((1,)).evaluate([0.1]) == pytest.approx(1.0)
    assert A.coefficient((1,)).evaluate([2.0]) == pytest.approx(0.0, abs=1e-15)


def test_average_keeps_zero_mode(H1, ctx1):
    """The k = 0 coefficient passes through unchanged."""
    K = trigonometric(ctx1, {(0,): 3.0})
    A = hdelta_average(K, H1)
    assert A.coefficient((0,)) is K.coefficient((0,))


def test_homological_identity_is_exact(H1, cos_perturbation):
    """i Omega_k P~ + K~ - A~ vanishes for the unsymmetrized solution."""
    P, A = solve_homological(cos_perturbation, H1)
    assert P.support == frozenset({(1,), (-1,)})
    assert homological_residual(P, cos_perturbation, A, H1) < 1e-12


def test_homological_generator_is_bounded_in_the_zone(H1, cos_perturbation):
    """phi vanishes on the plateau, so P~ is 0 at resonance."""
    P, _ = solve_homological(cos_perturbation, H1)
    assert P.coefficient((1,)).evaluate([0.0]) == pytest.approx(0.0)


def test_selfadjoint_solution(H1, cos_perturbation):
    """Symmetrized generator and average are self-adjoint."""
    P, A = selfadjoint_homological(cos_perturbation, H1)
    assert is_self_adjoint(P)
    assert is_self_adjoint(A)


def test_selfadjoint_average_rejects_non_self_adjoint(H1, ctx1):
    """A one-sided mode cannot be averaged self-adjointly."""
    K = trigonometric(ctx1, {(1,): 1.0})
    with pytest.raises(NotSelfAdjointError, match="not self-adjoint"):
        selfadjoint_hdelta_average(K, H1)
    with pytest.raises(NotSelfAdjointError):
        selfadjoint_homological(K, H1)
