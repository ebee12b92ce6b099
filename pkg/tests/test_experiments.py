import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cablearm.exceptions import ValidationError
from cablearm.experiments import (
    DecouplingReport,
    RepeatabilityReport,
    aggregate_poses,
    decoupling_experiment,
    pose_repeatability,
    reference_table,
    repeatability_stats,
    simulate_trajectory,
    synthetic_clouds,
    workspace_sweep,
)

from conftest import one_link

REACH = 0.776  # tool distance from the Joint1 axis with every other joint at zero


# --------------------------------------------------------------------------- repeatability


def test_identical_points():
    p = pose_repeatability(np.tile([1.0, 2.0, 3.0], (30, 1)))
    assert (p.mean, p.std, p.three_sigma) == (0.0, 0.0, 0.0)
    assert p.count == 30


def test_symmetric_pair():
    p = pose_repeatability([[1.0, 0, 0], [-1.0, 0, 0]])
    assert p.barycenter == (0.0, 0.0, 0.0)
    assert (p.mean, p.std, p.three_sigma) == (1.0, 0.0, 1.0)


def test_hand_computed_cloud():
    pts = np.array([[0, 0, 0], [3, 0, 0], [0, 3, 0], [0, 0, 3]], dtype=float)
    p = pose_repeatability(pts)
    # barycentre (0.75, 0.75, 0.75); distances sqrt(3)*0.75 and sqrt(2.25^2 + 2*0.75^2)
    d0, d1 = math.sqrt(3) * 0.75, math.sqrt(2.25**2 + 2 * 0.75**2)
    mean = (d0 + 3 * d1) / 4
    std = math.sqrt(((d0 - mean) ** 2 + 3 * (d1 - mean) ** 2) / 3)
    assert p.mean == pytest.approx(mean, rel=1e-14)
    assert p.std == pytest.approx(std, rel=1e-14)
    assert p.three_sigma == pytest.approx(mean + 3 * std, rel=1e-14)


def test_gaussian_cloud_mean_distance():
    cloud = synthetic_clouds(np.zeros((1, 3)), 100_000, 0.5, seed=7)[0]
    rep = repeatability_stats([cloud])
    assert rep.total_mean == pytest.approx(0.5 * math.sqrt(8 / math.pi), rel=0.01)


def test_too_few_points():
    with pytest.raises(ValidationError):
        pose_repeatability([[0.0, 0.0, 0.0]])
    with pytest.raises(ValidationError):
        pose_repeatability(np.zeros((4, 2)))
    with pytest.raises(ValidationError):
        repeatability_stats([np.zeros((5, 3)), np.zeros((1, 3))])


@settings(max_examples=40)
@given(arrays(np.float64, st.tuples(st.integers(2, 20), st.just(3)), elements=st.floats(-100, 100)), st.randoms())
def test_permutation_invariant(points, rnd):
    perm = list(range(len(points)))
    rnd.shuffle(perm)
    a, b = pose_repeatability(points), pose_repeatability(points[perm])
    assert a.mean == pytest.approx(b.mean, rel=1e-12, abs=1e-12)
    assert a.std == pytest.approx(b.std, rel=1e-9, abs=1e-9)
    assert a.three_sigma >= a.mean >= 0 and a.std >= 0


def test_reference_total_reproduced():
    rows, total = reference_table()
    assert len(rows) == 5
    rep = aggregate_poses(rows)
    assert rep.total_mean == pytest.approx(1.2896, abs=1e-4)
    assert rep.total_std == pytest.approx(total.std, abs=1e-4)
    assert rep.total_three_sigma == pytest.approx(total.three_sigma, abs=1e-4)


def test_report_dict_and_table_roundtrip():
    rep = repeatability_stats(synthetic_clouds(np.eye(3), 10, 0.3, seed=1))
    assert RepeatabilityReport.from_dict(rep.to_dict()) == rep
    assert RepeatabilityReport.from_table(*rep.to_table()) == rep


# --------------------------------------------------------------------------- decoupling


def test_decoupled_reports_zero(d3):
    rep = decoupling_experiment(d3)
    assert [r.joint for r in rep.rows] == [1, 2, 3]
    assert rep.max_displacement == 0.0
    assert rep.max_tension_change == 0.0


def test_naive_joint1_sweep(naive):
    rep = decoupling_experiment(naive, joints=(1,))
    assert rep.rows[0].max_displacement == pytest.approx(0.01 * math.pi / 3, rel=1e-12)
    assert rep.rows[0].max_displacement == pytest.approx(10.47e-3, abs=1e-5)


def test_tension_change_uses_routed_length(naive):
    rep = decoupling_experiment(naive, joints=(1,), routed_length=0.75)
    row = rep.rows[0]
    assert row.routed_length == 0.75
    # F = dL E A / L
    assert row.tension_change == pytest.approx(row.max_displacement * 100e9 * math.pi * 0.25e-6 / 0.75, rel=1e-12)


def test_decoupling_report_roundtrip(naive):
    rep = decoupling_experiment(naive)
    assert DecouplingReport.from_dict(rep.to_dict()) == rep
    assert DecouplingReport.from_table(*rep.to_table()) == rep


# --------------------------------------------------------------------------- trajectories


def _swing(d3, amplitude, duration, dt):
    wp = np.zeros((2, 6))
    wp[1, 0] = amplitude
    return simulate_trajectory(d3, wp, [0.0, duration], dt=dt)


def test_stationary(d3):
    wp = np.tile([0.1, 0.2, 0.3, 0.1, 0.2, 0.3], (3, 1))
    traj = simulate_trajectory(d3, wp, [0, 1, 2], dt=0.05)
    assert np.all(traj.speed < 1e-12)


def test_constant_rate_sweep_speed(d3):
    rate = 0.4
    times = np.array([0.0, 1.0, 2.0])
    wp = np.zeros((3, 6))
    wp[:, 0] = -0.4 + rate * times
    traj = simulate_trajectory(d3, wp, times, dt=0.01, boundary="not-a-knot")
    assert np.allclose(traj.speed, REACH * rate, rtol=1e-3)


def test_swing_peak_speed_closed_form(d3):
    # clamped two-point spline: q(t) = A (3 s^2 - 2 s^3), peak rate 1.5 A / T
    A, T = math.radians(50), 1.2
    traj = _swing(d3, A, T, 0.001)
    assert traj.peak_speed == pytest.approx(REACH * 1.5 * A / T, rel=0.01)


def test_speed_converges_with_sampling(d3):
    A, T = 0.8, 1.0

    def err(dt):
        traj = _swing(d3, A, T, dt)
        s = traj.time / T
        exact = REACH * A * (6 * s - 6 * s**2) / T
        return np.max(np.abs(traj.speed - exact))

    errors = [err(dt) for dt in (0.02, 0.01, 0.005)]
    assert errors[0] > errors[1] > errors[2]
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(orders >= 1.0)


def test_trajectory_outputs(d3):
    traj = _swing(d3, 0.5, 1.0, 0.1)
    assert np.all(np.diff(traj.time) > 0)
    assert traj.displacements.shape == (len(traj.time), 12)
    assert np.allclose(traj.motor_angles, traj.displacements / 0.015)
    samples = traj.samples
    assert len(samples) == len(traj.time) and samples[-1].time == pytest.approx(1.0)
    header, rows = traj.to_table()
    assert len(header) == len(rows[0])


@pytest.mark.parametrize(
    "wp, times",
    [
        ([[2.0, 0, 0, 0, 0, 0], [0, 0, 0, 0, 0, 0]], [0, 1]),
        ([[0] * 6, [0] * 6], [1, 1]),
        ([[0] * 6], [0]),
        ([[0] * 5, [0] * 5], [0, 1]),
    ],
)
def test_trajectory_validation(d3, wp, times):
    with pytest.raises(ValidationError):
        simulate_trajectory(d3, wp, times)


# --------------------------------------------------------------------------- workspace


def test_one_link_circle():
    ws = workspace_sweep(one_link(0.4), 500, seed=3)
    assert np.allclose(np.linalg.norm(ws.points, axis=1), 0.4, atol=1e-14)
    assert np.allclose(ws.points[:, 2], 0.0)


def test_points_within_reach(d3):
    ws = workspace_sweep(d3, 5000, seed=11)
    assert ws.stats["count"] == 5000
    assert ws.stats["max_radius_m"] <= d3.total_length + 1e-12
    assert d3.limits.contains(ws.joints.max(axis=0)) and d3.limits.contains(ws.joints.min(axis=0))


def test_workspace_deterministic(d3):
    a = workspace_sweep(d3, 10_000, seed=5, n_jobs=1)
    b = workspace_sweep(d3, 10_000, seed=5, n_jobs=4)
    c = workspace_sweep(d3, 10_000, seed=6)
    assert a.points.tobytes() == b.points.tobytes()
    assert a.points.tobytes() != c.points.tobytes()


def test_workspace_needs_samples(d3):
    with pytest.raises(ValidationError):
        workspace_sweep(d3, 0)
