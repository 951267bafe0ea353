import asyncio
import math
import threading
import time

import pytest

from core.fitting import dyadic_sweep, fit_loglog_slope
from core.workers import map_bounded, resolve_workers


# === Slope fits ===

def test_exact_power_law():
    """values = 3 hbar^2 gives slope 2 with zero residual."""
    hbars = dyadic_sweep(3, 6)
    fit = fit_loglog_slope(hbars, [3.0 * h**2 for h in hbars])
    assert fit.slope == pytest.approx(2.0)
    assert fit.intercept == pytest.approx(math.log2(3.0))
    assert fit.residual == pytest.approx(0.0, abs=1e-12)
    assert fit.points == 4
    assert fit.at_least(1.9)
    assert fit.within(2.0, 0.01)
    assert not fit.within(1.0, 0.5)


def test_values_below_floor_are_excluded():
    """Zeros drop out and are reported by hbar."""
    fit = fit_loglog_slope([0.5, 0.25, 0.125], [0.25, 0.0625, 0.0])
    assert fit.points == 2
    assert fit.excluded == (0.125,)
    assert fit.slope == pytest.approx(2.0)


def test_too_few_points_is_exact():
    """With fewer than two usable values the fit is exact and passes lower bounds."""
    fit = fit_loglog_slope([0.5, 0.25], [1e-16, 0.0])
    assert fit.exact
    assert math.isinf(fit.slope)
    assert fit.at_least(100.0)
    assert not fit.within(0.0, 1.0)
    assert fit.to_dict()["slope"] is None


def test_length_mismatch():
    """hbars and values must pair up."""
    with pytest.raises(ValueError, match="differ in length"):
        fit_loglog_slope([0.5, 0.25], [1.0])


def test_dyadic_sweep():
    """2^-first .. 2^-last."""
    assert dyadic_sweep(1, 3) == [0.5, 0.25, 0.125]


# === Workers ===

def test_resolve_workers():
    """An explicit count wins; otherwise the settings default applies."""
    assert resolve_workers(3) == 3
    assert resolve_workers(None) >= 1
    with pytest.raises(ValueError, match="must be positive"):
        resolve_workers(0)


@pytest.mark.asyncio
async def test_map_bounded_keeps_order():
    """Results follow submission order even when later items finish first."""
    def slow_square(x):
        time.sleep(0.01 * (3 - x))
        return x * x

    assert await map_bounded(slow_square, [0, 1, 2], workers=3) == [0, 1, 4]


@pytest.mark.asyncio
async def test_map_bounded_limits_concurrency():
    """No more than `workers` calls run at once."""
    lock = threading.Lock()
    state = {"running": 0, "peak": 0}

    def work(_):
        with lock:
            state["running"] += 1
            state["peak"] = max(state["peak"], state["running"])
        time.sleep(0.01)
        with lock:
            state["running"] -= 1

    await map_bounded(work, range(6), workers=2)
    assert state["peak"] <= 2


@pytest.mark.asyncio
async def test_map_bounded_propagates_errors():
    """An exception in one task surfaces from the gather."""
    def fail(x):
        raise RuntimeError(f"bad item {x}")

    with pytest.raises(RuntimeError, match="bad item"):
        await asyncio.wait_for(map_bounded(fail, [1], workers=1), timeout=5)
