import numpy as np
import pytest

from nhgeo.core.errors import ConfigError
from nhgeo.models.geometry import DiscreteCurve, MetricField, MinimizeOptions
from nhgeo.services.metrics_service import flat_metric
from nhgeo.services.riemannian_service import (
    curve_energy,
    curve_length,
    gauss_lemma_residual,
    integrate_geodesic,
    line_geodesic_residual,
    minimize_length,
    perturbed_line,
    riemannian_exp,
    riemannian_log,
    standard_radial_function,
    sup_distance_to_segment,
)
from nhgeo.services.systems_service import example53_metric, get_metric


def polar_metric():
    def evaluate(q):
        q = np.asarray(q, dtype=float)
        out = np.zeros(q.shape[:-1] + (2, 2))
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = q[..., 0] ** 2
        return out

    return MetricField(dim=2, evaluate=evaluate, name="polar")


def test_flat_exponential_is_translation():
    v = np.array([[0.3, -0.2], [1.0, 2.0]])
    base = np.array([1.0, 1.0])
    assert np.allclose(riemannian_exp(flat_metric(2), base, v), base + v, atol=1e-12)


def test_exponential_of_zero_is_the_base_point():
    base = np.array([0.2, -0.1])
    out = riemannian_exp(example53_metric(), base, np.zeros((3, 2)))
    assert np.array_equal(out, np.broadcast_to(base, (3, 2)))


def test_polar_geodesic_is_a_straight_line():
    # (x, y) = (1, 0) moving with unit speed along y reaches (1, 1)
    end = riemannian_exp(polar_metric(), np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    assert abs(end[0] - np.sqrt(2.0)) < 1e-6
    assert abs(end[1] - np.pi / 4.0) < 1e-6


def test_geodesic_speed_is_conserved():
    traj = integrate_geodesic(polar_metric(), np.array([1.0, 0.0]), np.array([0.5, 1.0]), T=1.0, steps=500)
    assert traj.speed_drift < 1e-8
    assert traj.max_constraint_residual == 0.0


def test_geodesic_rejects_non_positive_time():
    with pytest.raises(ConfigError):
        integrate_geodesic(flat_metric(2), np.zeros(2), np.ones(2), T=0.0)


def test_log_inverts_the_polar_exponential():
    target = np.array([np.sqrt(2.0), np.pi / 4.0])
    v = riemannian_log(polar_metric(), np.array([1.0, 0.0]), target)
    assert np.allclose(v, [0.0, 1.0], atol=1e-6)


def test_gauss_metric_exponential_is_the_identity():
    metric = example53_metric()
    v = np.array([[0.3, 0.1], [-0.2, 0.5], [0.0, -0.6]])
    assert np.allclose(riemannian_exp(metric, np.zeros(2), v), v, atol=1e-7)
    assert np.allclose(riemannian_log(metric, np.zeros(2), v), v, atol=1e-7)
    radial = standard_radial_function(metric, np.zeros(2), v)
    assert np.allclose(radial, np.linalg.norm(v, axis=-1), atol=1e-7)


@pytest.mark.parametrize("metric_id", ["flat", "example53", "pullback:particle", "pullback-gmod:disk"])
def test_gauss_lemma_holds_for_registry_metrics(metric_id, rng):
    metric = get_metric(metric_id)
    reach = 0.5 * metric.domain.radius
    v = rng.uniform(-1.0, 1.0, size=(10, 2))
    v = reach * v / np.maximum(np.linalg.norm(v, axis=-1, keepdims=True), 1.0)
    w = rng.standard_normal((10, 2))
    residual = gauss_lemma_residual(metric, np.zeros(2), v, w)
    assert np.max(residual) < 1e-6


@pytest.mark.slow
def test_gauss_lemma_holds_for_the_conformal_construction(rng):
    metric = get_metric("remark21:conformal:0.3,-0.2")
    v = 0.2 * rng.uniform(-1.0, 1.0, size=(10, 2))
    w = rng.standard_normal((10, 2))
    residual = gauss_lemma_residual(metric, np.zeros(2), v, w, fd_step=1e-4)
    assert np.max(residual) < 1e-6


def test_lines_are_geodesics_of_the_unit_ball_metric():
    directions = 0.8 * np.array([[1.0, 0.0], [0.0, 1.0], [np.sqrt(0.5), np.sqrt(0.5)], [np.sqrt(0.5), -np.sqrt(0.5)]])
    assert line_geodesic_residual(example53_metric(), directions) < 1e-8
    assert line_geodesic_residual(flat_metric(2), directions) == 0.0


def test_lines_are_not_geodesics_of_the_particle_ambient_pullback():
    directions = np.array([[1.0, 1.0], [1.0, -1.0], [0.5, 1.0]])
    assert line_geodesic_residual(get_metric("pullback:particle"), directions) > 1e-3


def test_flat_length_and_energy():
    t = np.linspace(0.0, 1.0, 11)[:, None]
    line = DiscreteCurve(nodes=t * np.array([3.0, 4.0]))
    assert abs(curve_length(flat_metric(2), line) - 5.0) < 1e-12
    assert abs(curve_energy(flat_metric(2), line) - 25.0) < 1e-10

    corner = DiscreteCurve(nodes=np.array([[0.0, 0.0], [3.0, 0.0], [3.0, 4.0]]))
    assert abs(curve_length(flat_metric(2), corner) - 7.0) < 1e-12


def test_perturbed_line_is_deterministic():
    a, b = np.zeros(2), np.array([1.0, 1.0])
    first = perturbed_line(a, b, 21, 0.1, rng=np.random.default_rng(7))
    second = perturbed_line(a, b, 21, 0.1, rng=np.random.default_rng(7))
    assert np.array_equal(first.nodes, second.nodes)
    assert np.array_equal(first.start, a) and np.array_equal(first.end, b)
    assert abs(sup_distance_to_segment(first, a, b) - 0.1) < 1e-12


def test_perturbed_line_without_rng_bends_along_an_axis():
    curve = perturbed_line(np.zeros(2), np.array([1.0, 0.0]), 11, 0.2)
    assert np.allclose(curve.nodes[:, 0], np.linspace(0.0, 1.0, 11))
    assert abs(curve.nodes[5, 1] - 0.2) < 1e-12


def test_perturbed_line_needs_two_nodes():
    with pytest.raises(ConfigError):
        perturbed_line(np.zeros(2), np.ones(2), 1, 0.1)


def test_minimization_straightens_a_flat_curve():
    a, b = np.zeros(2), np.array([1.0, 1.0])
    init = perturbed_line(a, b, 21, 0.1)
    result = minimize_length(flat_metric(2), (a, b), init)
    assert result.converged
    assert sup_distance_to_segment(result.curve, a, b) < 1e-4
    assert abs(result.final_length - np.sqrt(2.0)) < 1e-6


def test_minimization_recovers_the_radial_line_of_a_gauss_metric():
    a, b = np.zeros(2), np.array([0.5, 0.5])
    init = perturbed_line(a, b, 21, 0.1, rng=np.random.default_rng(0))
    result = minimize_length(example53_metric(), (a, b), init)
    assert abs(result.final_length - np.sqrt(0.5)) < 1e-3 * np.sqrt(0.5)
    assert sup_distance_to_segment(result.curve, a, b) < 1e-3
    assert np.all(np.diff(result.lengths) <= 1e-12)
    assert result.final_length < result.initial_length


def test_energy_objective_never_lengthens_the_curve():
    a, b = np.zeros(2), np.array([0.5, 0.0])
    init = perturbed_line(a, b, 11, 0.05)
    options = MinimizeOptions(objective="energy", max_iters=500)
    result = minimize_length(example53_metric(), None, init, options)
    assert result.final_length <= result.initial_length


def test_minimization_rejects_mismatched_endpoints():
    init = perturbed_line(np.zeros(2), np.ones(2), 5, 0.0)
    with pytest.raises(ConfigError):
        minimize_length(flat_metric(2), (np.zeros(2), np.array([2.0, 2.0])), init)
