import numpy as np
import pytest

from nhgeo.core.errors import ConfigError, DomainError
from nhgeo.services.geometry_service import christoffel_at
from nhgeo.services.systems_service import (
    EXP_SERIES_SWITCH,
    GMOD_SERIES_SWITCH,
    JACOBIAN_SERIES_SWITCH,
    PROFILE_SERIES_SWITCH,
    SINC_DERIVATIVE_SWITCH,
    discrepancy_notes,
    disk_exp_closed,
    disk_exp_jacobian,
    disk_gauss_radius,
    disk_gmod_pullback_closed,
    disk_gmod_pullback_published,
    disk_system,
    example52_metric_closed,
    example53_christoffel_oracle,
    example53_metric,
    get_metric,
    get_system,
    modified_lagrangian_residual,
    particle_exp_closed,
    particle_exp_jacobian,
    particle_exp_series,
    particle_exp_velocity,
    particle_inverse_closed,
)
from nhgeo.utils.numdiff import central_jacobian


def around(switch):
    return [0.5 * switch, 0.9 * switch, 1.1 * switch, 2.0 * switch]


PARTICLE_POINTS = np.array(
    [[1.0, v] for v in [0.0, 0.5, -1.3, 1.9] + around(EXP_SERIES_SWITCH) + around(JACOBIAN_SERIES_SWITCH)]
)
DISK_POINTS = np.array(
    [[u, v] for u, v in [(1.0, 0.0), (0.7, 1.2), (-1.5, -2.5), (2.0, 3.0)]]
    + [[1.0, v] for v in around(EXP_SERIES_SWITCH) + around(SINC_DERIVATIVE_SWITCH)]
)


def test_particle_jacobian_matches_finite_differences():
    numeric = central_jacobian(particle_exp_closed, PARTICLE_POINTS, 1e-6)
    assert np.max(np.abs(numeric - particle_exp_jacobian(PARTICLE_POINTS))) < 1e-8


def test_disk_jacobian_matches_finite_differences():
    numeric = central_jacobian(disk_exp_closed, DISK_POINTS, 1e-6)
    assert np.max(np.abs(numeric - disk_exp_jacobian(DISK_POINTS))) < 1e-8


def test_particle_tangent_map_at_unit_u():
    jac = particle_exp_jacobian(np.array([1.0, 0.0]))
    assert np.allclose(jac, [[1.0, 0.0], [0.0, 1.0], [0.0, 0.5]], atol=1e-14)


def test_particle_velocity_identity():
    velocity = np.einsum("nij,nj->ni", particle_exp_jacobian(PARTICLE_POINTS), PARTICLE_POINTS)
    assert np.max(np.abs(velocity - particle_exp_velocity(PARTICLE_POINTS))) < 1e-10


def test_particle_series_branch_is_continuous():
    below = np.array([[1.3, EXP_SERIES_SWITCH * (1.0 - 1e-9)]])
    above = np.array([[1.3, EXP_SERIES_SWITCH * (1.0 + 1e-9)]])
    assert np.max(np.abs(particle_exp_closed(below) - particle_exp_closed(above))) < 1e-12
    small = np.array([[0.8, 1e-3], [-0.4, -5e-3]])
    assert np.max(np.abs(particle_exp_series(small) - particle_exp_closed(small))) < 1e-12


def test_particle_exp_spot_values():
    x, y, z = particle_exp_closed(np.array([1.0, 1.0]))
    assert abs(x - np.arcsinh(1.0)) < 1e-14
    assert y == 1.0
    assert abs(z - (np.sqrt(2.0) - 1.0)) < 1e-14


def test_particle_inverse_recovers_fiber_coordinates():
    image = particle_exp_closed(PARTICLE_POINTS)
    assert np.allclose(particle_inverse_closed(image[:, :2]), PARTICLE_POINTS, atol=1e-12)


def test_disk_endpoint_of_the_half_turn():
    x, y, theta, phi = disk_exp_closed(np.array([1.0, np.pi]))
    assert abs(x) < 1e-15
    assert abs(y - 2.0 / np.pi) < 1e-12
    assert (theta, phi) == (1.0, np.pi)


@pytest.mark.parametrize("x", [0.5, -1.0])
def test_example52_components_are_continuous_across_the_series_switch(x):
    below = np.array([[x, PROFILE_SERIES_SWITCH * (1.0 - 1e-6)]])
    above = np.array([[x, PROFILE_SERIES_SWITCH * (1.0 + 1e-6)]])
    for lo, hi in zip(example52_metric_closed(below), example52_metric_closed(above)):
        assert np.max(np.abs(lo - hi)) < 1e-8


def test_example52_components_at_y_zero():
    E, F, G = example52_metric_closed(np.array([[0.7, 0.0]]))
    assert np.allclose([E[0], F[0], G[0]], [1.0, 0.0, 1.0], atol=1e-14)


def test_gmod_profile_is_continuous_across_the_series_switch():
    below = np.array([[1.5, GMOD_SERIES_SWITCH * (1.0 - 1e-9)]])
    above = np.array([[1.5, GMOD_SERIES_SWITCH * (1.0 + 1e-9)]])
    for lo, hi in zip(disk_gmod_pullback_closed(below, 1.0, 1.0), disk_gmod_pullback_closed(above, 1.0, 1.0)):
        assert np.max(np.abs(lo - hi)) < 1e-10


def test_gmod_pullback_limit_at_v_zero():
    E, F, G = disk_gmod_pullback_closed(np.array([[2.0, 0.0]]), 1.0, 2.0)
    assert np.allclose([E[0], F[0], G[0]], [2.0, 0.0, 1.0], atol=1e-14)


def test_gmod_pullback_is_indefinite_at_u_three():
    _, _, G = disk_gmod_pullback_closed(np.array([[3.0, 0.0]]), 1.0, 1.0)
    assert abs(G[0] - (1.0 - 9.0 / 4.0)) < 1e-14


def test_published_gmod_components_differ_from_the_derived_ones():
    w = np.array([[1.0, 1.0]])
    derived = np.stack(disk_gmod_pullback_closed(w, 1.0, 1.0))
    published = np.stack(disk_gmod_pullback_published(w, 1.0, 1.0))
    assert np.max(np.abs(derived - published)) > 1e-2


def test_modified_lagrangian_reproduces_disk_trajectories():
    w = np.array([[1.0, 0.5], [0.5, -1.0], [2.0, 1.0], [-1.0, 2.5]])
    assert modified_lagrangian_residual(1.0, 1.0, w) < 1e-7
    assert modified_lagrangian_residual(2.0, 0.5, w) < 1e-7


def test_unit_ball_christoffel_symbols_match_the_closed_form():
    w = np.array([[0.0, 0.0], [0.3, -0.2], [0.5, 0.5], [-0.7, 0.1], [0.1, 0.8]])
    numeric = christoffel_at(example53_metric(), w)
    assert np.max(np.abs(numeric - example53_christoffel_oracle(w))) < 1e-7


def test_unit_ball_metric_degenerates_on_the_circle():
    with pytest.raises(DomainError):
        example53_metric().evaluate(np.array([0.0, 1.0]))
    with pytest.raises(ConfigError):
        example53_metric(1.5)


def test_disk_gauss_radius():
    assert disk_gauss_radius(1.0) == pytest.approx(1.8)
    assert disk_gauss_radius(4.0) == pytest.approx(np.pi)
    assert disk_system(1.0, 4.0).gauss_domain.radius == pytest.approx(np.pi)


@pytest.mark.parametrize(
    "call",
    [
        lambda: get_system("pendulum"),
        lambda: get_system("example53-metric"),
        lambda: disk_system(0.0, 1.0),
        lambda: get_metric("sphere"),
        lambda: get_metric("remark21:sphere:0.3,0.2"),
        lambda: get_metric("remark21:conformal:0.3"),
        lambda: get_metric("remark21:conformal:a,b"),
        lambda: get_metric("pullback:disk", I=-1.0),
    ],
)
def test_registry_rejects_bad_ids_and_parameters(call):
    with pytest.raises(ConfigError):
        call()


def test_registry_radius_override():
    assert get_metric("flat", radius=0.25).domain.radius == 0.25
    assert get_metric("pullback:particle", radius=0.5).domain.norm == "max"
    assert get_metric("example53", radius=0.5).domain.radius == 0.5


def test_discrepancy_notes():
    notes = discrepancy_notes()
    assert len(notes) == 6
    assert all(note.published != note.derived for note in notes)
    assert any("0.9161" in note.resolution for note in notes)
