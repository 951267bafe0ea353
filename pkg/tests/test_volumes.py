import math
from unittest.mock import MagicMock, patch

import numpy as np
import pytest

from core.context import SemiclassicalContext
from geometry.hamiltonian import free, linear
from geometry.volumes import (
    BoxWindow,
    ShellWindow,
    estimate_volume,
    mc_volume,
    membership,
    slab_union_fraction,
    wilson_interval,
)


# === Windows ===

def test_box_window():
    """Volume and sampling of an axis-aligned box."""
    box = BoxWindow((1.0, -1.0), 0.5)
    assert box.d == 2
    assert box.volume() == pytest.approx(1.0)
    pts = box.sample(np.random.default_rng(0), 100)
    assert pts.shape == (100, 2)
    assert np.all(np.abs(pts - [1.0, -1.0]) <= 0.5)
    assert box.describe()["kind"] == "box"


def test_shell_window():
    """Samples land between the radii; the d=2 volume is an annulus area."""
    shell = ShellWindow(2, 1.0, 2.0)
    assert shell.volume() == pytest.approx(3.0 * math.pi)
    radii = np.linalg.norm(shell.sample(np.random.default_rng(1), 500), axis=1)
    assert np.all((radii >= 1.0 - 1e-12) & (radii <= 2.0 + 1e-12))


def test_shell_window_radii_checked():
    """r_in must lie below r_out."""
    with pytest.raises(ValueError, match="Shell radii"):
        ShellWindow(2, 2.0, 1.0)


# === Estimates ===

def test_wilson_interval():
    """The 95% Wilson interval brackets the sample proportion."""
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert lo == pytest.approx(1.0 - hi)
    assert wilson_interval(0, 100)[0] == pytest.approx(0.0, abs=1e-12)


def test_membership_kind_checked(H1):
    """Only zone and block volumes exist."""
    with pytest.raises(ValueError, match="Unknown volume kind"):
        membership(np.zeros((1, 1)), 1, H1, kind="shell")


def test_estimate_zone_fraction_d1(H1):
    """|xi| < 1 covers half of [-2, 2]."""
    est = estimate_volume(1, BoxWindow((0.0,), 2.0), H1, samples=20_000, seed=3, kind="zone")
    assert est.estimate == pytest.approx(0.5, abs=0.02)
    assert est.ci95[0] <= est.estimate <= est.ci95[1]
    assert est.row()["hits"] == est.hits


def test_estimate_is_reproducible(H1):
    """The same seed gives the same hits."""
    window = BoxWindow((0.0,), 2.0)
    first = estimate_volume(1, window, H1, samples=1000, seed=11)
    second = estimate_volume(1, window, H1, samples=1000, seed=11)
    assert first.hits == second.hits


def test_estimate_argument_checks(H1):
    """Sample count and window dimension are validated."""
    with pytest.raises(ValueError, match="at least one sample"):
        estimate_volume(1, BoxWindow((0.0,), 1.0), H1, samples=0, seed=0)
    with pytest.raises(ValueError, match="does not match d=1"):
        estimate_volume(1, BoxWindow((0.0, 0.0), 1.0), H1, samples=10, seed=0)


# === Sweeps ===

class TestMcVolume:
    """Test suite for hbar sweeps of Monte Carlo volumes."""

    @patch('geometry.volumes.get_client')
    def test_sweep_fits_an_exponent(self, mock_get_client, H1):
        """Zone fractions shrink with hbar and the fit reports a positive slope."""
        mock_client = MagicMock()
        mock_get_client.return_value = mock_client

        sweep = mc_volume(1, BoxWindow((0.0,), 2.0), H1, [2.0**-4, 2.0**-8], samples=4000, seed=5, kind="zone")

        assert len(sweep.estimates) == 2
        assert sweep.estimates[1].estimate < sweep.estimates[0].estimate
        assert sweep.fit.slope == pytest.approx(0.25, abs=0.05)
        assert sweep.reference_exponent == pytest.approx(0.2)
        assert not sweep.lower_bound_only
        mock_client.update_current_span.assert_called_once()

    @patch('geometry.volumes.get_client')
    def test_zero_hits_flag_lower_bound(self, mock_get_client, H1):
        """A window away from every zone reports a lower bound only."""
        mock_get_client.return_value = MagicMock()

        sweep = mc_volume(1, BoxWindow((5.0,), 1.0), H1, [2.0**-4, 2.0**-5], samples=200, seed=0, kind="zone")

        assert sweep.lower_bound_only
        assert sweep.fit.exact
        assert "no hits" in sweep.notes[0]
        assert sweep.to_dict()["fit"]["slope"] is None

    def test_exponent_condition(self):
        """delta > 2 d gamma is required."""
        ctx = SemiclassicalContext(d=2, hbar=0.0625, kappa=2.0, gamma=0.1, delta=0.3)
        with pytest.raises(ValueError, match="delta > 2\\*d\\*gamma violated"):
            mc_volume(1, BoxWindow((0.0, 0.0), 1.0), free(ctx), [0.0625], samples=10, seed=0)


# === Slab union ===

def test_slab_union_fraction(H2):
    """Slabs |xi_1| < 1 and |xi_2| < 1 cover three quarters of [-2, 2]^2."""
    assert slab_union_fraction(H2, BoxWindow((0.0, 0.0), 2.0)) == pytest.approx(0.75, abs=1e-8)


def test_slab_union_matches_monte_carlo(H2):
    """The exact union agrees with a Monte Carlo zone estimate."""
    window = BoxWindow((0.3, -0.2), 1.5)
    exact = slab_union_fraction(H2, window)
    est = estimate_volume(1, window, H2, samples=20_000, seed=2, kind="zone")
    assert est.estimate == pytest.approx(exact, abs=0.02)


def test_slab_union_restrictions(H1, ctx2):
    """Only d=2 quadratic Hamiltonians on boxes."""
    with pytest.raises(ValueError, match="d=2 box windows"):
        slab_union_fraction(H1, BoxWindow((0.0,), 1.0))
    with pytest.raises(ValueError, match="needs a quadratic Hamiltonian"):
        slab_union_fraction(linear(ctx2, [1.0, 0.5]), BoxWindow((0.0, 0.0), 1.0))
