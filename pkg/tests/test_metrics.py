from dataclasses import replace

import numpy as np
import pytest

from nhgeo.core.errors import ConfigError, DomainError, NotPositiveDefiniteError
from nhgeo.models.geometry import DomainSpec
from nhgeo.services.expmap_service import InducedChart
from nhgeo.services.geometry_service import metric_at, metric_partials_at
from nhgeo.services.metrics_service import (
    check_gauss,
    conformal_metric,
    flat_metric,
    gauss_metric_from_ambient,
    gauss_residual,
    gradient_flow_residual,
    pullback_metric,
    pushforward_metric,
    radial_distance,
    radial_gradient,
)
from nhgeo.services.systems_service import (
    disk_gmod_pullback_metric,
    example52_metric_closed,
    example53_metric,
    get_metric,
    particle_exp_closed,
    particle_exp_jacobian,
    patch_pullback_metric,
)
from nhgeo.utils.numdiff import central_partials


def test_flat_metric_passes_with_zero_residual():
    report = check_gauss(flat_metric(2))
    assert report.verdict == "PASS"
    assert report.max_residual == 0.0


def test_unit_ball_metric_passes():
    report = check_gauss(example53_metric(0.9))
    assert report.verdict == "PASS"
    assert report.max_residual < 1e-10


def test_particle_ambient_pullback_fails():
    metric = get_metric("pullback:particle", radius=1.0)
    report = check_gauss(metric)
    assert report.verdict == "FAIL"
    assert report.max_residual >= 0.05
    assert report.argmax_w is not None and report.argmax_z is not None


def test_particle_ambient_pullback_spot_value():
    metric = get_metric("pullback:particle")
    w = np.array([1.0, 1.0])
    value = metric_at(metric, w) @ w
    assert abs(abs(value[0] - 1.0) - 0.0839) < 1e-3
    assert abs(value[0] - 0.91612) < 1e-4
    assert abs(float(gauss_residual(metric, w, np.array([1.0, 0.0]))) - (value[0] - 1.0)) < 1e-12


@pytest.mark.parametrize("metric_id", ["pullback:particle", "example53", "pullback-gmod:disk"])
def test_gauss_residual_is_linear_in_the_direction(metric_id, rng):
    metric = get_metric(metric_id)
    w = rng.uniform(-0.5, 0.5, size=(40, 2))
    z = rng.normal(size=(40, 2))
    on_basis = [gauss_residual(metric, w, np.broadcast_to(e, w.shape)) for e in np.eye(2)]
    combined = z[:, 0] * on_basis[0] + z[:, 1] * on_basis[1]
    assert np.max(np.abs(gauss_residual(metric, w, z) - combined)) < 1e-12


def test_particle_ambient_pullback_residual_off_the_basis():
    metric = get_metric("pullback:particle")
    w = np.array([1.0, 1.0])
    residual = float(gauss_residual(metric, w, np.array([0.6, 0.8])))
    # speed conservation makes the residual vector orthogonal to w
    assert abs(residual - 0.2 * (1.0 - 0.91612)) < 2e-4
    assert abs(float(gauss_residual(metric, w, w))) < 1e-10


def test_closed_and_integrated_particle_pullbacks_agree(particle):
    closed = get_metric("pullback:particle")
    integrated = patch_pullback_metric(particle, steps=200)
    w = particle.gauss_domain.grid(5, 2)
    assert np.max(np.abs(metric_at(closed, w) - metric_at(integrated, w))) < 1e-6


@pytest.mark.parametrize("I,J", [(1.0, 1.0), (2.0, 0.5)])
def test_gmod_pullback_gauss_identities(I, J):
    metric = disk_gmod_pullback_metric(I, J)
    w = metric.domain.grid(21, 2)
    image = np.einsum("nij,nj->ni", metric_at(metric, w), w)
    assert np.max(np.abs(image[:, 0] - (I + 1.0) * w[:, 0])) < 1e-8
    assert np.max(np.abs(image[:, 1] - J * w[:, 1])) < 1e-8
    report = check_gauss(metric)
    assert report.verdict == "PASS"


def test_gmod_pullback_analytic_partials():
    metric = disk_gmod_pullback_metric(1.0, 1.0)
    w = np.array([[0.4, 0.7], [-0.3, 0.05], [1.0, -1.2], [0.2, 0.19], [0.2, 0.21]])
    numeric = central_partials(lambda x: metric_at(metric, x, check=False), w, 1e-5)
    assert np.max(np.abs(metric_partials_at(metric, w) - numeric)) < 1e-8


def test_gmod_pullback_loses_definiteness_beyond_its_radius():
    metric = disk_gmod_pullback_metric(1.0, 1.0, domain=DomainSpec.ball(np.pi))
    report = check_gauss(metric)
    assert report.verdict == "NOT_RIEMANNIAN_ON_DOMAIN"
    assert report.pd_failure_at is not None


def test_induced_flat_metric_matches_published_components(particle, particle_patch):
    chart = InducedChart(particle_patch, (0, 1), exp_map=particle_exp_closed, exp_jacobian=particle_exp_jacobian)
    g_nh = pushforward_metric(flat_metric(2), chart)
    x = np.linspace(-1.0, 1.0, 11)
    y = np.concatenate([-np.linspace(0.1, 1.5, 8), np.linspace(0.1, 1.5, 8)])
    points = np.stack([m.ravel() for m in np.meshgrid(x, y, indexing="ij")], axis=-1)
    E, F, G = example52_metric_closed(points)
    values = metric_at(g_nh, points)
    assert np.max(np.abs(values[:, 0, 0] - E)) < 1e-6
    assert np.max(np.abs(values[:, 0, 1] - F)) < 1e-6
    assert np.max(np.abs(values[:, 1, 1] - G)) < 1e-6


def test_pullback_stencils_must_stay_in_the_domain():
    metric = pullback_metric(lambda w: w, flat_metric(2), 2, DomainSpec.ball(1.0))
    with pytest.raises(DomainError):
        metric_at(metric, np.array([1.0, 0.0]))


def test_pullback_through_a_linear_map():
    matrix = np.array([[2.0, 1.0], [0.0, 3.0]])
    metric = pullback_metric(lambda w: w @ matrix.T, flat_metric(2), 2, DomainSpec.ball(1.0))
    assert np.allclose(metric_at(metric, np.array([0.1, 0.2])), matrix.T @ matrix, atol=1e-8)


def test_ambient_construction_gives_a_gauss_metric():
    ambient = conformal_metric((0.3, -0.2), domain=DomainSpec.ball(0.6))
    metric = gauss_metric_from_ambient(ambient, domain=DomainSpec.ball(0.6), steps=200)
    report = check_gauss(metric, grid=7, domain=DomainSpec.ball(0.3))
    assert report.verdict == "PASS"
    assert report.tolerance == 1e-6
    v = np.array([[0.2, 0.1], [-0.15, 0.2]])
    # the conformal factor is 1 at the origin
    assert np.max(np.abs(radial_distance(metric, v) - np.linalg.norm(v, axis=-1))) < 1e-6


def test_conformal_metric_partials():
    metric = conformal_metric((0.3, -0.2))
    w = np.array([0.1, 0.2])
    numeric = central_partials(lambda x: metric_at(metric, x), w, 1e-6)
    assert np.allclose(metric_partials_at(metric, w), numeric, atol=1e-8)
    assert metric.name == "conformal:0.3,-0.2"


def test_radial_gradient_of_a_gauss_metric():
    metric = example53_metric()
    v = np.array([[0.3, 0.2], [-0.1, 0.5]])
    grad = radial_gradient(metric, v)
    expected = v / np.linalg.norm(v, axis=-1, keepdims=True)
    assert np.max(np.abs(grad - expected)) < 1e-6
    norms = np.einsum("ni,nij,nj->n", grad, metric_at(metric, v), grad)
    assert np.max(np.abs(norms - 1.0)) < 1e-6


def test_radial_gradient_undefined_at_zero():
    with pytest.raises(ConfigError):
        radial_gradient(flat_metric(2), np.zeros(2))


def test_radial_gradient_flow_is_geodesic():
    assert gradient_flow_residual(example53_metric(), np.array([0.1, 0.05]), 0.3, steps=60) < 1e-5


def test_radial_distance_of_indefinite_values():
    metric = flat_metric(2, matrix=np.diag([1.0, -1.0]))
    with pytest.raises(NotPositiveDefiniteError):
        radial_distance(metric, np.array([[0.1, 0.5]]))


def test_check_gauss_needs_a_domain():
    metric = replace(flat_metric(2), domain=None)
    with pytest.raises(ConfigError):
        check_gauss(metric)
