import numpy as np
import pytest

from nhgeo.core.errors import ConfigError, ConstraintViolationError
from nhgeo.models.geometry import VelocityPolicy
from nhgeo.services.dynamics_service import (
    constraint_residual,
    homothety_residual,
    integrate_nh_batch,
    integrate_nh_geodesic,
    nh_acceleration,
    speed,
    trajectory_diagnostics,
)
from nhgeo.services.systems_service import disk_exp_closed, particle_exp_closed

ORIGIN3 = np.zeros(3)
ORIGIN4 = np.zeros(4)


def test_particle_endpoint_matches_closed_form(particle):
    traj = integrate_nh_geodesic(particle.system, ORIGIN3, [1.0, 1.0, 0.0], T=1.0, steps=1000)
    assert len(traj) == 1001
    assert abs(traj.endpoint[0] - 0.8813736) < 1e-7
    assert np.max(np.abs(traj.endpoint - particle_exp_closed(np.array([1.0, 1.0])))) < 1e-7


def test_disk_endpoint_matches_closed_form(disk):
    v0 = disk.chart.to_velocity(np.array([1.0, 3.14159]))
    traj = integrate_nh_geodesic(disk.system, ORIGIN4, v0, T=1.0, steps=1000)
    assert abs(traj.endpoint[1] - 0.6366) < 1e-4
    assert np.max(np.abs(traj.endpoint - disk_exp_closed(np.array([1.0, 3.14159])))) < 1e-7


def test_fourth_order_convergence(particle):
    w = np.array([1.0, 1.0])
    exact = particle_exp_closed(w)
    v0 = particle.chart.to_velocity(w)
    coarse = integrate_nh_geodesic(particle.system, ORIGIN3, v0, steps=50).endpoint
    fine = integrate_nh_geodesic(particle.system, ORIGIN3, v0, steps=100).endpoint
    ratio = np.max(np.abs(coarse - exact)) / np.max(np.abs(fine - exact))
    assert 8.0 < ratio < 24.0


def test_fourth_order_convergence_at_production_step_counts(particle):
    # at |w| = 2 sqrt(2) the 1000-step truncation error sits well above round-off
    w = np.array([2.0, 2.0])
    exact = particle_exp_closed(w)
    v0 = particle.chart.to_velocity(w)
    coarse = integrate_nh_geodesic(particle.system, ORIGIN3, v0, steps=500).endpoint
    fine = integrate_nh_geodesic(particle.system, ORIGIN3, v0, steps=1000).endpoint
    assert np.max(np.abs(fine - exact)) < 1e-7
    ratio = np.max(np.abs(coarse - exact)) / np.max(np.abs(fine - exact))
    assert 8.0 < ratio < 24.0


def test_speed_and_constraint_are_conserved(particle, disk):
    for entry, w in ((particle, [0.7, -1.2]), (disk, [1.0, 2.0])):
        q0 = np.zeros(entry.system.chart_dim)
        traj = integrate_nh_geodesic(entry.system, q0, entry.chart.to_velocity(np.array(w)), steps=1000)
        assert traj.speed_drift < 1e-8
        assert traj.max_constraint_residual < 1e-9


@pytest.mark.parametrize("scale", [0.5, 2.0, 3.0])
def test_homothety(particle, scale):
    v0 = particle.chart.to_velocity(np.array([0.6, 0.8]))
    assert homothety_residual(particle.system, ORIGIN3, v0, scale, T=1.0, steps=1000) < 1e-7


def test_zero_velocity_gives_constant_trajectory(particle):
    traj = integrate_nh_geodesic(particle.system, ORIGIN3, np.zeros(3), steps=10)
    assert np.all(traj.q == 0.0)
    assert traj.speed_drift == 0.0


def test_strict_policy_rejects_velocities_outside_the_distribution(particle):
    with pytest.raises(ConstraintViolationError):
        integrate_nh_geodesic(particle.system, ORIGIN3, [0.0, 0.0, 1.0])


def test_project_policy_moves_velocity_into_the_distribution(particle):
    traj = integrate_nh_geodesic(
        particle.system, [0.0, 1.0, 0.0], [1.0, 0.0, 0.0], steps=200, policy=VelocityPolicy.PROJECT
    )
    assert np.max(constraint_residual(particle.system, traj.q, traj.v)) < 1e-9
    assert abs(traj.speeds[0] - np.sqrt(0.5)) < 1e-12


def test_acceleration_keeps_the_constraint(particle):
    q = np.array([0.2, 0.5, -0.1])
    v = np.array([1.0, 0.3, 0.5])  # A(q) v = -0.5 + 0.5 = 0
    a = nh_acceleration(particle.system, q, v)
    # d/dt (z' - y x') = a_z - v_y v_x - y a_x
    assert abs(a[2] - v[1] * v[0] - q[1] * a[0]) < 1e-12


@pytest.mark.parametrize(
    "v, expected",
    [
        ([1.0, 0.0, 0.0], [0.0, 0.0, 0.0]),
        ([1.0, 1.0, 0.0], [0.0, 0.0, 1.0]),
        ([0.0, 0.0, 0.0], [0.0, 0.0, 0.0]),
    ],
)
def test_particle_acceleration_at_the_origin(particle, v, expected):
    assert np.allclose(nh_acceleration(particle.system, ORIGIN3, np.array(v)), expected, atol=1e-12)


def test_disk_acceleration_values(disk):
    # rolling straight ahead is free motion; turning bends (x', y') with phi'
    assert np.allclose(nh_acceleration(disk.system, ORIGIN4, np.array([1.0, 0.0, 1.0, 0.0])), 0.0, atol=1e-12)
    a = nh_acceleration(disk.system, ORIGIN4, np.array([1.0, 0.0, 1.0, 2.0]))
    assert np.allclose(a, [0.0, 2.0, 0.0, 0.0], atol=1e-12)


def test_batch_matches_single_trajectories(particle):
    w = np.array([[1.0, 0.5], [-0.3, 0.9]])
    _, q, _ = integrate_nh_batch(particle.system, ORIGIN3, particle.chart.to_velocity(w), 1.0, 400)
    for i in range(2):
        single = integrate_nh_geodesic(particle.system, ORIGIN3, particle.chart.to_velocity(w[i]), steps=400)
        assert np.allclose(q[i], single.endpoint, atol=1e-14)


def test_speed_is_the_metric_norm(disk):
    v = disk.chart.to_velocity(np.array([1.0, 2.0]))
    assert np.isclose(speed(disk.system.g, ORIGIN4, v), np.sqrt(v @ disk.system.g.evaluate(ORIGIN4) @ v))


def test_diagnostics_recompute_the_trajectory_checks(particle):
    traj = integrate_nh_geodesic(particle.system, ORIGIN3, [1.0, 1.0, 0.0], steps=500)
    drift, residual, reparam = trajectory_diagnostics(traj, particle.system)
    assert drift < 1e-8 and residual < 1e-9 and reparam < 1e-7


def test_invalid_time_and_steps(particle):
    with pytest.raises(ConfigError):
        integrate_nh_geodesic(particle.system, ORIGIN3, [1.0, 0.0, 0.0], T=0.0)
    with pytest.raises(ConfigError):
        integrate_nh_geodesic(particle.system, ORIGIN3, [1.0, 0.0, 0.0], steps=0)
