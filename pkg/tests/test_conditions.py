"""Structural condition checks: valid catalogs pass, engineered specs fail."""

import numpy as np
import pytest

from spavg.conditions import CONDITION_IDS, ConditionReport, check_condition, sample_field
from spavg.grid import Grid1D, smallest_eigenvalue, zeros
from spavg.operators import CouplingSpec, FastOperatorSpec, SlowOperatorSpec
from spavg.randomness import RngStream

GRID = Grid1D(16)
COUPLING = CouplingSpec(f0=zeros(GRID), g1_modes=8, g2_modes=8)

SLOW_SPECS = [
    SlowOperatorSpec("porous_medium", p=3.0, c=1.0),
    SlowOperatorSpec("p_laplace", p=4.0),
    SlowOperatorSpec("burgers", viscosity=1.0),
]
FAST_SPECS = [
    FastOperatorSpec("linear", c_b=1.0),
    FastOperatorSpec("smooth_bounded", c_b=1.0, b=1.0),
]


def test_report_validation():
    with pytest.raises(ValueError):
        ConditionReport("A3_coercive", 10, 11, 0.0, {})


def test_check_condition_rejects_unknown_inputs():
    with pytest.raises(ValueError):
        check_condition("A1_hemicontinuity", SLOW_SPECS[0], FAST_SPECS[0], COUPLING, GRID, 10, RngStream(0, 0))
    with pytest.raises(ValueError):
        check_condition("A3_coercive", SLOW_SPECS[0], FAST_SPECS[0], COUPLING, GRID, 1, RngStream(0, 0))


def test_sample_field_scales_with_amplitude():
    gen = np.random.default_rng(4)
    small = sample_field(GRID, np.random.default_rng(4), 0.1)
    large = sample_field(GRID, np.random.default_rng(4), 10.0)
    np.testing.assert_allclose(large, 100.0 * small, rtol=1e-12)
    assert sample_field(GRID, gen, 1.0).shape == (16,)


@pytest.mark.parametrize("slow", SLOW_SPECS, ids=lambda s: s.kind)
@pytest.mark.parametrize("condition", ["A2_local_monotone", "A3_coercive", "A4_growth"])
def test_slow_conditions_hold_on_catalog(slow, condition):
    report = check_condition(
        condition, slow, FAST_SPECS[0], COUPLING, GRID, 150, RngStream(2026, 1)
    )
    assert report.samples == 150
    assert report.violations == 0
    assert report.worst_margin > 0.0


@pytest.mark.parametrize("fast", FAST_SPECS, ids=lambda s: s.kind)
@pytest.mark.parametrize("condition", ["B2_dissipative", "B3_coercive", "B4_growth"])
def test_fast_conditions_hold_on_catalog(fast, condition):
    report = check_condition(
        condition, SLOW_SPECS[2], fast, COUPLING, GRID, 150, RngStream(2026, 2)
    )
    assert report.violations == 0
    assert report.worst_margin > 0.0


def test_b2_fitted_rate_matches_spectral_gap():
    lam = smallest_eigenvalue(GRID)
    report = check_condition(
        "B2_dissipative", SLOW_SPECS[2], FAST_SPECS[0], COUPLING, GRID, 200, RngStream(7, 0)
    )
    # The linear fast drift contracts every direction at >= 2 lambda_1 and
    # the mode-1 probe attains it, so the fit pins the spectral gap.
    assert report.fitted_constants["gamma_hat"] == pytest.approx(2.0 * lam, rel=0.05)


def test_b2_detects_engineered_violation():
    lam = smallest_eigenvalue(GRID)
    bad = FastOperatorSpec("smooth_bounded", c_b=1.0, b=lam + 1.0)
    report = check_condition(
        "B2_dissipative", SLOW_SPECS[2], bad, COUPLING, GRID, 100, RngStream(7, 1)
    )
    assert report.violations >= 1
    assert report.worst_margin <= 0.0


def test_a3_reports_known_theta():
    # For the porous medium drift the coercivity constant is exactly c.
    slow = SlowOperatorSpec("porous_medium", p=3.0, c=2.0)
    report = check_condition(
        "A3_coercive", slow, FAST_SPECS[0], COUPLING, GRID, 80, RngStream(9, 0)
    )
    assert report.violations == 0
    assert "theta" in report.fitted_constants
    assert report.fitted_constants["theta"] >= 0.0


def test_constants_are_reported_for_fitted_conditions():
    for condition in ("A4_growth", "B3_coercive", "B4_growth"):
        report = check_condition(
            condition, SLOW_SPECS[1], FAST_SPECS[1], COUPLING, GRID, 60, RngStream(10, 0)
        )
        assert "C" in report.fitted_constants
        assert report.fitted_constants["C"] >= 0.0


def test_reports_are_reproducible():
    a = check_condition(
        "A2_local_monotone", SLOW_SPECS[2], FAST_SPECS[0], COUPLING, GRID, 50, RngStream(3, 3)
    )
    b = check_condition(
        "A2_local_monotone", SLOW_SPECS[2], FAST_SPECS[0], COUPLING, GRID, 50, RngStream(3, 3)
    )
    assert a == b
