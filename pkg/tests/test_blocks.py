"""Auxiliary replay and the two block statistics."""

import numpy as np
import pytest

from spavg.blocks import (
    BlockSchedule,
    build_auxiliary,
    deviation_statistic,
    increment_statistic,
)
from spavg.grid import L2, Grid1D
from spavg.integrators import SchemeParams, Trajectory, simulate_coupled
from spavg.randomness import RngStream

from test_integrators import make_model


def test_block_schedule_validation():
    with pytest.raises(ValueError):
        BlockSchedule(0.0, 0.01)
    with pytest.raises(ValueError):
        BlockSchedule(0.015, 0.01)  # one and a half steps
    with pytest.raises(ValueError):
        BlockSchedule(0.005, 0.01)  # shorter than a step
    sched = BlockSchedule(0.04, 0.01)
    assert sched.steps_per_block == 4
    assert [sched.anchor_step(j) for j in range(9)] == [0, 0, 0, 0, 4, 4, 4, 4, 8]


def test_auxiliary_with_delta_equal_dt_is_exact_replay():
    model = make_model()
    params = SchemeParams(dt_macro=1 / 64)
    trajectory, path, _ = simulate_coupled(model, 0.25, params, RngStream(40, 0))
    schedule = BlockSchedule(params.dt_macro, params.dt_macro)
    auxiliary = build_auxiliary(model, trajectory, path, schedule, params)
    np.testing.assert_array_equal(auxiliary, trajectory.y)
    assert deviation_statistic(trajectory, auxiliary, model.grid) == 0.0


def test_auxiliary_deviates_for_coarser_blocks():
    model = make_model()
    params = SchemeParams(dt_macro=1 / 64)
    trajectory, path, _ = simulate_coupled(model, 0.25, params, RngStream(40, 0))
    schedule = BlockSchedule(8 / 64, params.dt_macro)
    auxiliary = build_auxiliary(model, trajectory, path, schedule, params)
    assert auxiliary[0] == pytest.approx(trajectory.y[0])
    assert deviation_statistic(trajectory, auxiliary, model.grid) > 0.0
    # Block boundaries re-anchor the slow input but the auxiliary state
    # itself is continuous: it never jumps back onto the true path.
    gaps = np.abs(auxiliary - trajectory.y).max(axis=1)
    assert gaps[8] > 0.0


def test_auxiliary_validates_consistency():
    model = make_model()
    params = SchemeParams(dt_macro=1 / 64)
    trajectory, path, _ = simulate_coupled(model, 0.25, params, RngStream(41, 0))
    with pytest.raises(ValueError):
        build_auxiliary(model, trajectory, path, BlockSchedule(1 / 32, 1 / 32), params)
    other = make_model(epsilon=0.1)
    with pytest.raises(ValueError):
        build_auxiliary(other, trajectory, path, BlockSchedule(1 / 32, 1 / 64), params)
    # Different micro stepping than the recording run is refused.
    finer = SchemeParams(dt_macro=1 / 64, dt_fast_target=1e-4)
    with pytest.raises(ValueError):
        build_auxiliary(model, trajectory, path, BlockSchedule(1 / 32, 1 / 64), finer)


def test_deviation_statistic_constant_offset():
    # Constant integrand: the trapezoid rule integrates it exactly to
    # T * ||c||^2.
    grid = Grid1D(4)
    m, dt = 10, 0.05
    times = np.arange(m + 1) * dt
    y = np.zeros((m + 1, 4))
    c = np.array([1.0, -2.0, 0.5, 0.0])
    trajectory = Trajectory(times, np.zeros((m + 1, 4)), y)
    auxiliary = y + c
    expected = (m * dt) * (grid.h * float(c @ c))
    assert deviation_statistic(trajectory, auxiliary, grid) == pytest.approx(
        expected, rel=1e-14
    )


def test_increment_statistic_hand_value():
    # Linear growth x_j = j * dt * v with two steps per block: the gaps to
    # the anchors are (1, 2, 1, 2) * dt * v, so the integral is
    # dt^3 * ||v||^2 * (1 + 4 + 1 + 4).
    grid = Grid1D(3)
    dt = 0.25
    v = np.array([1.0, 0.0, -1.0])
    x = np.array([j * dt * v for j in range(5)])
    sched = BlockSchedule(2 * dt, dt)
    norm_v_sq = grid.h * float(v @ v)
    expected = dt**3 * norm_v_sq * 10.0
    assert increment_statistic(x, sched, grid, L2) == pytest.approx(expected, rel=1e-13)


def test_increment_statistic_constant_path_is_zero():
    grid = Grid1D(3)
    x = np.ones((9, 3))
    sched = BlockSchedule(0.2, 0.1)
    assert increment_statistic(x, sched, grid, L2) == 0.0


def test_increment_statistic_accepts_trajectory():
    model = make_model()
    params = SchemeParams(dt_macro=1 / 64)
    trajectory, _, stats = simulate_coupled(model, 0.25, params, RngStream(42, 0))
    sched = BlockSchedule(4 / 64, params.dt_macro)
    from_trajectory = increment_statistic(trajectory, sched, model.grid, L2)
    from_array = increment_statistic(trajectory.x, sched, model.grid, L2)
    assert from_trajectory == from_array
    assert from_trajectory == pytest.approx(stats.increment_integral(4 / 64), rel=1e-12)


def test_increment_statistic_rejects_long_delta():
    grid = Grid1D(3)
    x = np.zeros((5, 3))
    with pytest.raises(ValueError):
        increment_statistic(x, BlockSchedule(0.8, 0.1), grid, L2)
