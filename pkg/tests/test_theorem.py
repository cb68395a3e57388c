import numpy as np
import pytest

from nhgeo.core.errors import ConfigError
from nhgeo.models.geometry import DomainSpec
from nhgeo.models.models import RunConfig
from nhgeo.services.metrics_service import flat_metric
from nhgeo.services.systems_service import get_metric, get_system
from nhgeo.services.theorem_service import (
    build_gauss_metric,
    build_patch,
    stage_gauss_metric,
    stage_minimization,
    three_way_check,
    uses_default_base,
    verify_theorem,
)


def verdicts(checks):
    return {c.name: c.verdict for c in checks}


@pytest.mark.parametrize("metric_id", ["flat", "example53", "pullback-gmod:disk"])
def test_three_way_check_agrees_on_gauss_metrics(metric_id):
    checks = three_way_check(get_metric(metric_id))
    assert set(verdicts(checks).values()) == {"PASS"}


def test_three_way_check_agrees_on_the_particle_ambient_pullback():
    result = verdicts(three_way_check(get_metric("pullback:particle")))
    assert result["gauss-condition"] == "FAIL"
    assert result["lines-are-geodesics"] == "FAIL"
    assert result["exp-is-inclusion"] == "FAIL"
    assert result["equivalence"] == "PASS"


@pytest.mark.slow
def test_three_way_check_agrees_on_the_conformal_construction():
    metric = get_metric("remark21:conformal:0.3,-0.2")
    checks = three_way_check(metric, steps=64)
    assert set(verdicts(checks).values()) == {"PASS"}


def test_default_base_detection():
    entry = get_system("particle")
    assert uses_default_base(entry, RunConfig())
    assert uses_default_base(entry, RunConfig(base=[0.0, 0.0, 0.0]))
    assert not uses_default_base(entry, RunConfig(base=[0.0, 0.5, 0.0]))


def test_patch_honours_the_radius_override():
    entry = get_system("particle")
    patch = build_patch(entry, RunConfig(radius=0.5))
    assert patch.domain.radius == 0.5
    assert patch.domain.norm == "max"


def test_patch_rejects_a_base_of_the_wrong_dimension():
    with pytest.raises(ConfigError):
        build_patch(get_system("disk"), RunConfig(system="disk", base=[0.0, 1.0]))


def test_gmod_choice_needs_the_disk():
    with pytest.raises(ConfigError):
        build_gauss_metric(get_system("particle"), "pullback-gmod", RunConfig())


def test_unknown_metric_choice_is_a_config_error():
    with pytest.raises(ConfigError):
        verify_theorem(RunConfig(metric="sphere"))


def test_gmod_gauss_metric_stage_passes():
    config = RunConfig(system="disk", metric="pullback-gmod")
    report, metric = stage_gauss_metric(get_system("disk"), "pullback-gmod", config)
    assert report.verdict == "PASS"
    names = verdicts(report.checks)
    assert set(names) == {"positive-definite", "gmod-gauss-identities", "closed-form-vs-pullback", "modified-lagrangian"}
    assert metric.dim == 2


def test_minimization_stage_recovers_radial_segments():
    evidence = {}
    metric = flat_metric(2, domain=DomainSpec.ball(1.0))
    report = stage_minimization(metric, RunConfig(), evidence)
    assert report.verdict == "PASS"
    header, rows = evidence["minimize_trace"]
    assert header == ["iteration", "length_1", "length_2"]
    assert np.all(np.diff(rows[:, 1]) <= 1e-12)


@pytest.mark.slow
def test_particle_with_flat_gauss_metric_passes_every_stage():
    report, evidence = verify_theorem(RunConfig(system="particle", metric="flat"))
    assert [s.verdict for s in report.stages] == ["PASS"] * 5
    assert report.verdict == "PASS"
    assert set(evidence) == {"induced_exp", "minimize_trace"}
    assert len(report.notes) == 6


@pytest.mark.slow
def test_disk_with_gmod_pullback_passes_every_stage():
    report, _ = verify_theorem(RunConfig(system="disk", metric="pullback-gmod"))
    assert report.verdict == "PASS"


@pytest.mark.slow
def test_particle_ambient_pullback_skips_the_dependent_stages():
    report, evidence = verify_theorem(RunConfig(system="particle", metric="pullback-ambient"))
    stages = {s.stage: s.verdict for s in report.stages}
    assert stages["a"] == "PASS"
    assert stages["c"] == "FAIL"
    assert stages["d"] == "SKIPPED" and stages["e"] == "SKIPPED"
    assert report.verdict == "FAIL"
    assert evidence == {}
