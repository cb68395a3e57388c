from dataclasses import replace

import numpy as np
import pytest

from conftest import box_grid
from nhgeo.core.errors import ConfigError, DomainError
from nhgeo.models.geometry import DomainSpec, ExpMapPatch
from nhgeo.services.expmap_service import (
    InducedChart,
    exp_nh,
    exp_nh_inverse,
    exp_nh_jacobian,
    exp_nh_state,
    make_tangent_chart,
    rescaling_residual,
    round_trip_residual,
    tangent_map_residual,
    validate_domain,
    velocity_identity_residual,
)
from nhgeo.services.systems_service import (
    disk_exp_closed,
    particle_exp_closed,
    particle_exp_jacobian,
    particle_exp_velocity,
)


def test_particle_oracle_on_grid(particle_patch):
    w = box_grid([1.0, 1.0])
    assert np.max(np.abs(exp_nh(particle_patch, w) - particle_exp_closed(w))) < 1e-7


def test_disk_oracle_on_grid(disk_patch):
    w = box_grid([1.0, 2.0])
    assert np.max(np.abs(exp_nh(disk_patch, w) - disk_exp_closed(w))) < 1e-7


def test_exp_of_zero_is_the_base_point(particle_patch):
    assert np.all(exp_nh(particle_patch, np.zeros(2)) == 0.0)


def test_points_outside_the_patch_are_rejected(particle_patch):
    with pytest.raises(DomainError):
        exp_nh(particle_patch, np.array([2.5, 0.0]))


def test_tangent_map_at_zero_is_the_inclusion(particle_patch, disk_patch):
    assert tangent_map_residual(particle_patch) < 1e-6
    assert tangent_map_residual(disk_patch) < 1e-6


@pytest.mark.parametrize("w", [[0.8, -0.6], [1.5, 1.5], [-0.2, 1.9]])
def test_rescaling(particle_patch, w):
    assert rescaling_residual(particle_patch, np.array(w)) < 1e-8


def test_disk_rescaling(disk_patch):
    assert rescaling_residual(disk_patch, np.array([1.0, 2.0])) < 1e-8


def test_jacobian_and_final_velocity(particle_patch):
    w = np.array([[0.7, 0.4], [-1.2, 0.9]])
    jac = exp_nh_jacobian(particle_patch, w)
    assert np.max(np.abs(jac - particle_exp_jacobian(w))) < 1e-6
    _, velocity = exp_nh_state(particle_patch, w)
    assert np.max(np.abs(velocity - particle_exp_velocity(w))) < 1e-8
    assert velocity_identity_residual(particle_patch, w) < 1e-6


def test_inverse_recovers_fiber_coordinates(particle_patch):
    w = np.array([[0.5, 0.5], [-1.0, 1.2], [1.6, -0.4]])
    result = exp_nh_inverse(particle_patch, exp_nh(particle_patch, w), (0, 1))
    assert np.max(np.abs(result.w - w)) < 1e-8
    assert np.max(result.full_residual) < 1e-9
    assert result.converged


def test_inverse_flags_points_off_the_image(particle_patch):
    target = exp_nh(particle_patch, np.array([0.5, 0.5])) + np.array([0.0, 0.0, 0.1])
    result = exp_nh_inverse(particle_patch, target, (0, 1))
    assert abs(float(result.full_residual) - 0.1) < 1e-8


def test_round_trips_and_validation(particle, particle_patch):
    w = particle.patch_domain.scaled(0.5).grid(5, 2)
    assert round_trip_residual(particle_patch, w, (0, 1)) < 1e-8
    validated = validate_domain(replace(particle_patch, steps=200), (0, 1))
    assert validated.domain.radius == particle.patch_domain.radius


def test_invalid_selection(particle_patch):
    with pytest.raises(ConfigError):
        exp_nh_inverse(particle_patch, np.zeros(3), (0, 0))


def test_induced_chart_closed_and_integrated_agree(particle, particle_patch):
    numeric = InducedChart(particle_patch, (0, 1))
    closed = InducedChart(particle_patch, (0, 1), exp_map=particle_exp_closed, exp_jacobian=particle_exp_jacobian)
    assert closed.closed_form and not numeric.closed_form
    w = np.array([[0.3, -0.4], [0.9, 0.2]])
    assert np.max(np.abs(numeric.forward(w) - closed.forward(w))) < 1e-8
    assert np.max(np.abs(numeric.jacobian(w) - closed.jacobian(w))) < 1e-6
    y = closed.forward(w)
    assert np.max(np.abs(closed.inverse(y) - w)) < 1e-9
    assert np.max(np.abs(numeric.inverse(y) - w)) < 1e-8


def test_induced_chart_needs_both_closed_forms(particle_patch):
    with pytest.raises(ConfigError):
        InducedChart(particle_patch, (0, 1), exp_map=particle_exp_closed)


def test_tangent_chart_rejects_basis_outside_the_distribution(particle):
    with pytest.raises(ConfigError):
        make_tangent_chart(particle.system, np.zeros(3), np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]]))


def test_derived_chart_is_orthonormal(particle):
    chart = make_tangent_chart(particle.system, np.array([0.0, 1.0, 0.0]))
    assert np.allclose(chart.basis.T @ chart.basis, np.eye(2), atol=1e-12)
    assert chart.labels == ("w1", "w2")


def test_patch_domain_must_contain_zero(particle):
    shifted = DomainSpec.from_predicate(lambda w: np.asarray(w)[..., 0] > 0.5, radius=1.0)
    with pytest.raises(ConfigError):
        ExpMapPatch(sys=particle.system, chart=particle.chart, domain=shifted)
