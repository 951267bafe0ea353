import os
import shutil
import tempfile

import numpy as np
import pytest

from averaging.homological import homological_residual, self_adjoint_part, selfadjoint_homological, solve_homological
from calculus.coefficients import cosine, polynomial
from calculus.symbols import (
    FourierSymbol,
    add_symbols,
    adjoint,
    adjoint_expansion_term,
    moyal_expansion_term,
    moyal_product,
    poisson_with_H,
    symbol_sup_norm,
    trigonometric,
)
from core.context import default_context
from core.fitting import dyadic_sweep, fit_loglog_slope
from experiments.blockmap import run_blockmap
from experiments.config import ExperimentConfig
from experiments.fkt import run_fkt
from experiments.scaling import run_scaling
from experiments.volumes import run_volumes
from geometry.hamiltonian import free, quadratic
from normal_form.iteration import normal_form_iterate
from oracle.quantization import quantize

SWEEP = dyadic_sweep(3, 8)


def random_symbol(ctx, rng, modes: int = 3) -> FourierSymbol:
    """A few modes with |k|_inf <= 2 and random complex quadratic coefficients."""
    coeffs = {}
    for _ in range(modes):
        k = tuple(int(v) for v in rng.integers(-2, 3, size=ctx.d))
        c = complex(rng.normal(), rng.normal())
        b = rng.normal(size=ctx.d) + 1j * rng.normal(size=ctx.d)
        q = 0.1 * (rng.normal(size=(ctx.d, ctx.d)) + 1j * rng.normal(size=(ctx.d, ctx.d)))
        coeffs[k] = polynomial(ctx.d, c, b, q)
    return FourierSymbol(ctx, coeffs)


def cosine_modes(ctx, frequency: float, amplitude: float = 1.0) -> FourierSymbol:
    """cos(frequency xi) (e^{ix} + e^{-ix})."""
    f = cosine([frequency], amplitude)
    return FourierSymbol(ctx, {(1,): f, (-1,): f})


def contexts(hbars):
    return [default_context(h, d=1) for h in hbars]


# === Truncated expansions ===

def test_moyal_two_term_remainder_is_second_order():
    """A # B - C_0 - C_1 shrinks like hbar^2."""
    norms = []
    for ctx in contexts(SWEEP):
        A = cosine_modes(ctx, 1.0)
        B = cosine_modes(ctx, 2.0, 0.5)
        remainder = add_symbols([
            (1.0, moyal_product(A, B)),
            (-1.0, moyal_expansion_term(A, B, 0)),
            (-1.0, moyal_expansion_term(A, B, 1)),
        ])
        norms.append(symbol_sup_norm(remainder))

    fit = fit_loglog_slope(SWEEP, norms)

    assert fit.slope >= 1.8


def test_adjoint_two_term_remainder_is_second_order():
    """P* minus its first two expansion terms shrinks like hbar^2."""
    norms = []
    for ctx in contexts(SWEEP):
        P = FourierSymbol(ctx, {(1,): cosine([1.0])})
        remainder = add_symbols([
            (1.0, adjoint(P)),
            (-1.0, adjoint_expansion_term(P, 0)),
            (-1.0, adjoint_expansion_term(P, 1)),
        ])
        norms.append(symbol_sup_norm(remainder))

    fit = fit_loglog_slope(SWEEP, norms)

    assert fit.slope >= 1.8


def test_poisson_bracket_is_the_leading_commutator_term():
    """quantize({P, H}) and (i/hbar)[quantize(H), quantize(P)] differ by exactly hbar/2."""
    errors = []
    for ctx in contexts(SWEEP):
        H = free(ctx)
        P = trigonometric(ctx, {(1,): 1.0, (-1,): 1.0})
        QH = quantize(H.symbol, 8).matrix
        QP = quantize(P, 8).matrix
        bracket = quantize(poisson_with_H(P, H), 8).matrix
        error = float(np.max(np.abs(bracket - (1j / ctx.hbar) * (QH @ QP - QP @ QH))))
        assert error == pytest.approx(ctx.hbar / 2, rel=1e-9)
        errors.append(error)

    assert fit_loglog_slope(SWEEP, errors).slope >= 0.9


def test_selfadjoint_homological_residual_shrinks():
    """Symmetrizing the pair costs O(hbar^(1 - delta)) in the identity."""
    residuals = []
    for ctx in contexts(SWEEP):
        H = free(ctx)
        K = trigonometric(ctx, {(1,): 1.0, (-1,): 1.0})
        P, A = selfadjoint_homological(K, H)
        residuals.append(homological_residual(P, K, A, H))

    assert fit_loglog_slope(SWEEP, residuals).slope >= 0.5


# === Oracle identities on random symbols ===

@pytest.mark.parametrize("d,K_basis,pairs", [(1, 64, 50), (2, 12, 10)])
def test_moyal_matches_matrix_product_on_random_pairs(d, K_basis, pairs):
    """quantize(A # B) equals quantize(A) quantize(B) on the interior block."""
    ctx = default_context(2.0**-4, d=d)
    rng = np.random.default_rng(11 + d)
    for _ in range(pairs):
        A = random_symbol(ctx, rng)
        B = random_symbol(ctx, rng)
        QA = quantize(A, K_basis, bandwidth=4)
        QB = quantize(B, K_basis, bandwidth=4)
        QC = quantize(moyal_product(A, B), K_basis, bandwidth=4)
        expected = QA.interior_block(QA.matrix @ QB.matrix)
        scale = max(1.0, float(np.max(np.abs(expected))))
        np.testing.assert_allclose(QC.interior_block(), expected, rtol=0, atol=1e-12 * scale)


def test_adjoint_matches_conjugate_transpose_on_random_symbols():
    """quantize(P*) equals quantize(P)^dagger entrywise, boundary included."""
    ctx = default_context(2.0**-4, d=1)
    rng = np.random.default_rng(5)
    for _ in range(50):
        P = random_symbol(ctx, rng)
        M = quantize(P, 16).matrix
        np.testing.assert_allclose(quantize(adjoint(P), 16).matrix, M.conj().T, rtol=0, atol=1e-12)


def test_homological_identity_on_random_pairs():
    """i Omega_k P~ + K~ - A~ vanishes for random quadratic H and self-adjoint K."""
    ctx = default_context(2.0**-4, d=2)
    rng = np.random.default_rng(3)
    for _ in range(20):
        B = rng.normal(size=(2, 2))
        H = quadratic(ctx, B @ B.T + 0.5 * np.eye(2))
        K = self_adjoint_part(random_symbol(ctx, rng))
        P, A = solve_homological(K, H)
        assert homological_residual(P, K, A, H) < 1e-12


# === Normal form and quasimodes over the hbar sweep ===

def test_first_remainder_slope():
    """K_1 is O(hbar^alpha) with alpha = 0.7 for 2 cos x."""
    norms = []
    for ctx in contexts(SWEEP):
        K0 = trigonometric(ctx, {(1,): 1.0, (-1,): 1.0})
        nf = normal_form_iterate(free(ctx), K0, N=1, M=6, band_limit=8)
        norms.append(nf.diagnostics[0].remainder_norm)

    assert fit_loglog_slope(SWEEP, norms).slope >= 0.5


class TestSweeps:
    """Experiment runs over several hbar values."""

    def setup_method(self):
        self.test_dir = tempfile.mkdtemp()

    def teardown_method(self):
        shutil.rmtree(self.test_dir)

    def passed(self, outcome, name: str) -> bool:
        return {c.name: c.passed for c in outcome.checks.checks}[name]

    @pytest.mark.asyncio
    async def test_quasimode_slopes(self):
        """One step gives residual slope >= 2.45 and overlap deviation slope >= 0.45."""
        config = ExperimentConfig(d=1, hbars=dyadic_sweep(3, 7), N=1)

        outcome = await run_scaling(config, self.test_dir)

        assert outcome.passed, outcome.checks.failed
        assert self.passed(outcome, "residual_slope[momentum=[1.5]]")
        assert self.passed(outcome, "overlap_slope[momentum=[1.5]]")

    @pytest.mark.asyncio
    async def test_fkt_next_correction_slope(self):
        """E - hbar^2 k^2 - hbar^2 <<V>> shrinks faster than hbar^(2 + alpha - 0.25)."""
        config = ExperimentConfig(
            d=1,
            hbars=dyadic_sweep(3, 7),
            N=1,
            perturbation=[{"k": [0], "value": 0.5}, {"k": [1], "value": 1.0}, {"k": [-1], "value": 1.0}],
        )

        outcome = await run_fkt(config, self.test_dir)

        assert self.passed(outcome, "next_correction_slope[momentum=[1.5]]"), outcome.checks.failed

    @pytest.mark.asyncio
    async def test_geometric_lemma_over_the_sweep(self):
        """No violations over 1000 lower-block points per hbar."""
        hbars = [2.0**-4, 2.0**-6, 2.0**-8]
        config = ExperimentConfig(
            d=2,
            hbars=hbars,
            grid_points=3,
            lemma_samples=1000,
            window={"kind": "box", "half_width": 4.0},
        )

        outcome = await run_blockmap(config, self.test_dir)

        assert outcome.passed, outcome.checks.failed
        for h in hbars:
            assert outcome.summary["lemma"][f"{h:.17g}"]["evaluated"] == 1000

    @pytest.mark.asyncio
    async def test_zone_volume_exponent(self):
        """The order-one zone volume in d=2 scales like hbar^(delta - 3 gamma)."""
        config = ExperimentConfig(d=2, hbars=dyadic_sweep(4, 10), samples=1_000_000)

        outcome = await run_volumes(config, self.test_dir)

        assert self.passed(outcome, "zone_exponent[n=1]"), outcome.checks.failed

    # === Determinism ===

    def csv_bytes(self, sub: str, name: str) -> bytes:
        with open(os.path.join(self.test_dir, sub, name), "rb") as f:
            return f.read()

    @pytest.mark.asyncio
    async def test_volumes_are_worker_independent(self):
        """Identical config and seed give identical CSV bytes for 1 and 2 workers."""
        config = ExperimentConfig(d=2, hbars=[2.0**-4, 2.0**-5], orders=[1, 2], samples=20_000, seed=9)

        await run_volumes(config, os.path.join(self.test_dir, "one"), workers=1)
        await run_volumes(config, os.path.join(self.test_dir, "two"), workers=2)

        assert self.csv_bytes("one", "volumes.csv") == self.csv_bytes("two", "volumes.csv")

    @pytest.mark.asyncio
    async def test_scaling_is_worker_independent(self):
        """Quasimode rows do not depend on the worker count."""
        config = ExperimentConfig(d=1, hbars=dyadic_sweep(4, 6), N=1, M=2, K_basis=12)

        await run_scaling(config, os.path.join(self.test_dir, "one"), workers=1)
        await run_scaling(config, os.path.join(self.test_dir, "three"), workers=3)

        assert self.csv_bytes("one", "quasimodes.csv") == self.csv_bytes("three", "quasimodes.csv")
