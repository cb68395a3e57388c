"""
End-to-end verification that radial nonholonomic trajectories are the
minimizing geodesics of the induced metric g^nh_q on M^nh_q.

Stages, run in order:
    a  exponential-map patch (tangent map at 0, rescaling, closed-form oracle)
    b  the Gauss metric G_0 on the fiber
    c  the three equivalent forms of the Gauss condition
    d  g^nh_q in induced coordinates and exp^{g^nh_q}_q = exp^nh_q
    e  length minimization recovers radial curves
"""

import logging
from dataclasses import replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from nhgeo.core.errors import ConfigError, NumericalError
from nhgeo.models.geometry import (
    DomainSpec,
    ExpMapPatch,
    MinimizeOptions,
    SystemRegistryEntry,
    VectorMetric,
)
from nhgeo.models.models import CheckResult, RunConfig, StageReport, TheoremReport
from nhgeo.services.expmap_service import (
    InducedChart,
    exp_nh,
    make_tangent_chart,
    rescaling_residual,
    tangent_map_residual,
    validate_domain,
    velocity_identity_residual,
)
from nhgeo.services.geometry_service import metric_at
from nhgeo.services.metrics_service import check_gauss, flat_metric, pullback_metric, pushforward_metric
from nhgeo.services.riemannian_service import (
    curve_length,
    line_geodesic_residual,
    minimize_length,
    perturbed_line,
    riemannian_exp,
    sup_distance_to_segment,
)
from nhgeo.services.systems_service import (
    REMARK21_COEFFS,
    disk_exp_closed,
    disk_exp_jacobian,
    disk_gmod_pullback_metric,
    discrepancy_notes,
    get_metric,
    get_system,
    gmod_metric,
    modified_lagrangian_residual,
    patch_pullback_metric,
)
from nhgeo.utils.linalg import check_positive_definite

logger = logging.getLogger(__name__)

STAGE_TITLES = {
    "a": "exponential-map patch",
    "b": "Gauss metric G_0",
    "c": "Gauss condition equivalences",
    "d": "induced metric g^nh_q",
    "e": "length minimization",
}
METRIC_CHOICES = ("flat", "remark21", "pullback-gmod", "pullback-ambient")

TANGENT_TOL = 1e-6
RESCALING_TOL = 1e-8
VELOCITY_TOL = 1e-6
ORACLE_TOL = 1e-7
IDENTITY_TOL = 1e-8
MODIFIED_LAGRANGIAN_TOL = 1e-7
EXACT_LINE_TOL = 1e-7
FD_LINE_TOL = 1e-5
INDUCED_TOL = 1e-6
RADIAL_DISTANCE_TOL = 1e-3
RADIAL_LENGTH_RTOL = 1e-3

Evidence = Dict[str, Tuple[List[str], np.ndarray]]


def _check(name: str, value: float, tol: float, detail: Optional[str] = None) -> CheckResult:
    value = float(value)
    verdict = "PASS" if np.isfinite(value) and value < tol else "FAIL"
    return CheckResult(name=name, value=value, tolerance=tol, verdict=verdict, detail=detail)


def _failed(name: str, error: Exception) -> CheckResult:
    return CheckResult(name=name, verdict="FAIL", detail=f"{type(error).__name__}: {error}")


def _stage(stage: str, checks: List[CheckResult], detail: Optional[str] = None) -> StageReport:
    verdict = "PASS" if checks and all(c.verdict == "PASS" for c in checks) else "FAIL"
    return StageReport(stage=stage, title=STAGE_TITLES[stage], verdict=verdict, checks=checks, detail=detail)


def _skipped(stage: str, reason: str) -> StageReport:
    return StageReport(stage=stage, title=STAGE_TITLES[stage], verdict="SKIPPED", detail=reason)


def _nonzero(points: np.ndarray) -> np.ndarray:
    return points[np.any(points != 0.0, axis=-1)]


def _probe_directions(domain: DomainSpec, k: int, fraction: float = 0.5) -> np.ndarray:
    """A few fiber vectors at a fraction of the domain's reach along the diagonals and axes."""
    reach = fraction * domain.radius * (1.0 - domain.margin)
    directions = np.concatenate([np.eye(k), np.ones((1, k)), -np.ones((1, k))])
    points = reach * directions / domain.norm_of(directions)[:, None]
    return points[domain.contains(points)]


# ============================================================================
# THREE-WAY CHECK
# ============================================================================

def three_way_check(
    G: VectorMetric,
    domain: Optional[DomainSpec] = None,
    grid: int = 21,
    coarse_grid: int = 5,
    steps: Optional[int] = None,
) -> List[CheckResult]:
    """
    The Gauss condition, "lines through 0 are geodesics" and "exp_0 is the
    inclusion", evaluated independently; the final check records whether the
    three verdicts agree.

    Args:
        G: Metric on R^k
        domain: Sweep domain (G's domain by default)
        grid: Points per axis of the Gauss sweep
        coarse_grid: Points per axis of the line and exponential grids
        steps: Integrator steps of the geodesics
    """
    domain = domain or G.domain
    tol = EXACT_LINE_TOL if G.analytic else FD_LINE_TOL
    checks = []

    gauss = check_gauss(G, grid=grid, domain=domain)
    checks.append(
        CheckResult(
            name="gauss-condition",
            value=gauss.max_residual,
            tolerance=gauss.tolerance,
            verdict="PASS" if gauss.verdict == "PASS" else "FAIL",
            detail=gauss.detail or f"argmax w={gauss.argmax_w}, z={gauss.argmax_z}",
        )
    )

    directions = _nonzero(domain.grid(coarse_grid, G.dim))
    try:
        checks.append(_check("lines-are-geodesics", line_geodesic_residual(G, directions), tol))
    except NumericalError as e:
        checks.append(_failed("lines-are-geodesics", e))
    try:
        endpoints = riemannian_exp(G, np.zeros(G.dim), directions, steps)
        checks.append(_check("exp-is-inclusion", np.max(np.abs(endpoints - directions)), tol))
    except NumericalError as e:
        checks.append(_failed("exp-is-inclusion", e))

    verdicts = {c.verdict for c in checks}
    checks.append(
        CheckResult(
            name="equivalence",
            verdict="PASS" if len(verdicts) == 1 else "FAIL",
            detail=", ".join(f"{c.name}={c.verdict}" for c in checks),
        )
    )
    logger.info(f"Three-way check of '{G.name}': {checks[-1].detail}")
    return checks


# ============================================================================
# STAGES
# ============================================================================

def uses_default_base(entry: SystemRegistryEntry, config: RunConfig) -> bool:
    return config.base is None or np.array_equal(np.asarray(config.base, dtype=float), entry.base_point.coords)


def build_patch(entry: SystemRegistryEntry, config: RunConfig) -> ExpMapPatch:
    """
    Exponential-map patch of a registry system, honouring the base point and
    radius overrides of the run configuration.

    Closed-form oracles of the registry only hold at its default base point.
    """
    domain = entry.patch_domain
    if config.radius is not None:
        domain = DomainSpec.ball(config.radius, norm=domain.norm)
    chart = entry.chart
    if not uses_default_base(entry, config):
        if len(config.base) != entry.system.chart_dim:
            raise ConfigError(
                f"Base point of '{entry.id}' needs {entry.system.chart_dim} coordinates, got {len(config.base)}"
            )
        chart = make_tangent_chart(entry.system, config.base, labels=entry.chart.labels)
    return ExpMapPatch(sys=entry.system, chart=chart, domain=domain, steps=config.steps)


def stage_patch(entry: SystemRegistryEntry, config: RunConfig) -> Tuple[StageReport, ExpMapPatch]:
    patch = build_patch(entry, config)
    k = patch.k
    checks = []

    # round trips only test the inversion, so the coarser metric integrator suffices
    probe = validate_domain(replace(patch, steps=config.metric_steps), entry.induced_select)
    if probe.domain.radius != patch.domain.radius:
        checks.append(
            CheckResult(name="domain-validation", verdict="PASS", detail=f"shrunk to {probe.domain.describe()}")
        )
        patch = replace(patch, domain=probe.domain)
    else:
        checks.append(CheckResult(name="domain-validation", verdict="PASS", detail=patch.domain.describe()))

    checks.append(_check("tangent-map-at-0", tangent_map_residual(patch), TANGENT_TOL))
    rescaling = max(rescaling_residual(patch, w) for w in _probe_directions(patch.domain, k))
    checks.append(_check("rescaling", rescaling, RESCALING_TOL))

    samples = _nonzero(patch.domain.scaled(0.5).grid(config.coarse_grid, k))
    checks.append(_check("velocity-identity", velocity_identity_residual(patch, samples), VELOCITY_TOL))
    if entry.exp_closed is not None and uses_default_base(entry, config):
        error = np.max(np.abs(exp_nh(patch, samples) - entry.exp_closed(samples)))
        checks.append(_check("closed-form-oracle", error, ORACLE_TOL))
    return _stage("a", checks), patch


def build_gauss_metric(entry: SystemRegistryEntry, choice: str, config: RunConfig) -> VectorMetric:
    """
    The Gauss metric candidate G_0 on the fiber coordinates.

    Raises:
        ConfigError: For an unknown choice, or pullback-gmod on a system without g^mod
    """
    k = entry.chart.k
    if choice == "flat":
        metric = flat_metric(k, domain=entry.gauss_domain)
    elif choice == "remark21":
        coeffs = ",".join(f"{c:g}" for c in REMARK21_COEFFS)
        metric = get_metric(f"remark21:conformal:{coeffs}", metric_steps=config.metric_steps)
    elif choice == "pullback-gmod":
        if entry.id != "disk":
            raise ConfigError(f"pullback-gmod needs the modified Lagrangian of the disk, not '{entry.id}'")
        metric = disk_gmod_pullback_metric(config.I, config.J)
    elif choice == "pullback-ambient":
        metric = patch_pullback_metric(entry, config.metric_steps, name=f"pullback-ambient:{entry.id}")
    else:
        raise ConfigError(f"Unknown Gauss metric choice '{choice}'; choose one of {', '.join(METRIC_CHOICES)}")
    if metric.dim != k:
        raise ConfigError(f"Metric '{metric.name}' has dimension {metric.dim}, the fiber has {k}")
    return metric


def stage_gauss_metric(
    entry: SystemRegistryEntry, choice: str, config: RunConfig
) -> Tuple[StageReport, VectorMetric]:
    G0 = build_gauss_metric(entry, choice, config)
    k = G0.dim
    checks = []
    samples = G0.domain.grid(config.coarse_grid, k)
    try:
        check_positive_definite(metric_at(G0, samples, check=False), samples, what=f"Metric '{G0.name}'")
        checks.append(CheckResult(name="positive-definite", verdict="PASS", detail=G0.domain.describe()))
    except NumericalError as e:
        checks.append(_failed("positive-definite", e))

    if choice == "pullback-gmod":
        I, J = config.I, config.J
        nodes = G0.domain.grid(config.grid, k)
        expected = nodes * np.array([I + 1.0, J])
        identity = np.einsum("nij,nj->ni", metric_at(G0, nodes), nodes)
        checks.append(_check("gmod-gauss-identities", np.max(np.abs(identity - expected)), IDENTITY_TOL))

        numeric = pullback_metric(
            disk_exp_closed, gmod_metric(I, J), k, entry.patch_domain, jacobian=disk_exp_jacobian
        )
        delta = np.max(np.abs(metric_at(numeric, samples, check=False) - metric_at(G0, samples)))
        checks.append(_check("closed-form-vs-pullback", delta, IDENTITY_TOL))
        residual = modified_lagrangian_residual(I, J, _nonzero(samples), steps=config.steps)
        checks.append(_check("modified-lagrangian", residual, MODIFIED_LAGRANGIAN_TOL))
    return _stage("b", checks, detail=G0.name), G0


def stage_equivalences(G0: VectorMetric, config: RunConfig) -> StageReport:
    steps = config.steps if G0.analytic else config.outer_steps
    checks = three_way_check(G0, grid=config.grid, coarse_grid=config.coarse_grid, steps=steps)
    verdict = "PASS" if all(c.verdict == "PASS" for c in checks) else "FAIL"
    return StageReport(stage="c", title=STAGE_TITLES["c"], verdict=verdict, checks=checks, detail=G0.name)


def stage_induced_metric(
    entry: SystemRegistryEntry, patch: ExpMapPatch, G0: VectorMetric, config: RunConfig, evidence: Evidence
) -> StageReport:
    """
    Compare exp^{g^nh_q}_q, integrated in induced coordinates, with the
    selected components of the integrated exp_nh.
    """
    k = patch.k
    if uses_default_base(entry, config):
        chart = InducedChart(patch, entry.induced_select, exp_map=entry.exp_closed, exp_jacobian=entry.exp_jacobian)
    else:
        chart = InducedChart(patch, entry.induced_select)
    g_nh = pushforward_metric(G0, chart, name=f"g^nh[{G0.name}]")
    checks = []

    velocities = _nonzero(G0.domain.scaled(0.5).grid(config.coarse_grid, k))
    origin = np.zeros(k)
    y0 = chart.forward(origin)
    eta = np.einsum("ij,nj->ni", chart.jacobian(origin), velocities)
    geodesic = riemannian_exp(g_nh, y0, eta, config.outer_steps)
    target = exp_nh(patch, velocities)[..., chart.select]
    errors = np.max(np.abs(geodesic - target), axis=-1)
    checks.append(_check("exp-gnh-equals-exp-nh", np.max(errors), INDUCED_TOL))
    evidence["induced_exp"] = (
        [f"w{i + 1}" for i in range(k)]
        + [f"exp_gnh_{i + 1}" for i in range(k)]
        + [f"exp_nh_{i + 1}" for i in range(k)]
        + ["error"],
        np.column_stack([velocities, geodesic, target, errors]),
    )

    recovered = pullback_metric(chart.forward, g_nh, k, patch.domain, jacobian=chart.jacobian)
    samples = velocities
    delta = np.max(np.abs(metric_at(recovered, samples) - metric_at(G0, samples)))
    checks.append(_check("pullback-recovers-G0", delta, INDUCED_TOL))
    return _stage("d", checks, detail="closed-form chart" if chart.closed_form else "integrated chart")


def stage_minimization(G0: VectorMetric, config: RunConfig, evidence: Evidence) -> StageReport:
    """
    Minimize length in the fiber coordinates from perturbed lines 0 -> v and
    check that the radial segment is recovered with length ||v||_{G_0(0)}.
    """
    k = G0.dim
    rng = np.random.default_rng(config.seed)
    options = MinimizeOptions(objective=config.objective, max_iters=config.max_iters, grad_tol=config.grad_tol)
    g0 = metric_at(G0, np.zeros(k))
    distance, length_error, increase = 0.0, 0.0, 0.0
    statuses = []
    traces = []

    for v in _probe_directions(G0.domain, k)[-2:]:
        origin = np.zeros(k)
        amplitude = min(config.bump, 0.2 * float(np.linalg.norm(v)))
        init = perturbed_line(origin, v, config.nodes, amplitude, rng=rng)
        result = minimize_length(G0, (origin, v), init, options=options)
        expected = float(np.sqrt(v @ g0 @ v))
        distance = max(distance, sup_distance_to_segment(result.curve, origin, v))
        length_error = max(length_error, abs(result.final_length - expected) / expected)
        increase = max(increase, result.final_length - curve_length(G0, init))
        statuses.append(result.status)
        traces.append(result.lengths)

    checks = [
        _check("radial-recovery", distance, RADIAL_DISTANCE_TOL),
        _check("length-equals-G0-norm", length_error, RADIAL_LENGTH_RTOL),
        _check("descent", increase, 1e-12),
    ]
    rows = max(len(t) for t in traces)
    padded = [np.concatenate([t, np.full(rows - len(t), t[-1])]) for t in traces]
    evidence["minimize_trace"] = (
        ["iteration"] + [f"length_{i + 1}" for i in range(len(padded))],
        np.column_stack([np.arange(rows)] + padded),
    )
    return _stage("e", checks, detail=f"optimizer status: {', '.join(statuses)}")


# ============================================================================
# PIPELINE
# ============================================================================

def verify_theorem(config: RunConfig) -> Tuple[TheoremReport, Evidence]:
    """
    Run stages a to e for config.system with the Gauss metric choice config.metric.

    A numerical failure inside a stage fails that stage; stages that need its
    result are SKIPPED. When stage c fails, d and e are SKIPPED since the
    Gauss condition they rely on is absent.

    Returns:
        Tuple[TheoremReport, Evidence]: Stage report (verdict PASS iff every
        stage passed) and CSV evidence tables by name

    Raises:
        ConfigError: For unknown systems or metric choices
    """
    entry = get_system(config.system, config.I, config.J)
    choice = config.metric
    if choice not in METRIC_CHOICES:
        raise ConfigError(f"Unknown Gauss metric choice '{choice}'; choose one of {', '.join(METRIC_CHOICES)}")
    stages: List[StageReport] = []
    evidence: Evidence = {}
    patch = G0 = None

    try:
        report, patch = stage_patch(entry, config)
    except NumericalError as e:
        report = _stage("a", [_failed("patch", e)])
    stages.append(report)

    try:
        report, G0 = stage_gauss_metric(entry, choice, config)
    except NumericalError as e:
        report = _stage("b", [_failed("gauss-metric", e)])
    stages.append(report)

    if G0 is None:
        stages.append(_skipped("c", "no Gauss metric candidate"))
    else:
        try:
            stages.append(stage_equivalences(G0, config))
        except NumericalError as e:
            stages.append(_stage("c", [_failed("equivalences", e)]))

    premise = stages[-1].verdict == "PASS"
    for stage, run in (
        ("d", lambda: stage_induced_metric(entry, patch, G0, config, evidence)),
        ("e", lambda: stage_minimization(G0, config, evidence)),
    ):
        if not premise:
            stages.append(_skipped(stage, "G_0 does not satisfy the Gauss condition"))
        elif stage == "d" and patch is None:
            stages.append(_skipped(stage, "no validated exponential-map patch"))
        else:
            try:
                stages.append(run())
            except NumericalError as e:
                stages.append(_stage(stage, [_failed(STAGE_TITLES[stage], e)]))

    for s in stages:
        log = logger.info if s.verdict != "FAIL" else logger.warning
        log(f"Stage {s.stage} ({s.title}): {s.verdict}")
    verdict = "PASS" if all(s.verdict == "PASS" for s in stages) else "FAIL"
    report = TheoremReport(
        system=entry.id,
        metric=choice if G0 is None else G0.name,
        verdict=verdict,
        stages=stages,
        notes=discrepancy_notes(),
        config=config.model_dump(),
    )
    return report, evidence
