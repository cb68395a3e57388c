from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from typing import Any, Dict, List, Optional

from nhgeo.core.config import settings


# ============================================================================
# RUN CONFIGURATION
# ============================================================================

class RunConfig(BaseModel):
    """
    Fully resolved configuration of one command run.
    Built from defaults, then config-file keys, then command-line flags.
    """

    model_config = ConfigDict(extra="forbid")

    command: str = ""
    system: str = "particle"
    I: float = 1.0
    J: float = 1.0
    metric: str = "flat"
    kind: str = "ambient"            # pullback kind: ambient, gmod or induced-flat
    base: Optional[List[float]] = None
    radius: Optional[float] = None
    steps: int = settings.integrator_steps
    metric_steps: int = 200          # integrator steps inside metrics built from integrated maps
    outer_steps: int = 64            # geodesic steps on metrics without closed-form Christoffels
    grid: int = 21
    coarse_grid: int = 5
    tol: Optional[float] = None
    T: float = 1.0
    v0: Optional[List[float]] = None
    policy: str = "strict"
    project_each_step: bool = False
    start: Optional[List[float]] = None
    end: Optional[List[float]] = None
    bump: float = 0.1
    nodes: int = 21
    objective: str = "length"
    max_iters: int = 5000
    grad_tol: float = 1e-6
    seed: int = 0
    out: str = settings.output_dir

    @field_validator("I", "J", "T", "grad_tol", "bump")
    @classmethod
    def positive(cls, value: float, info):
        if info.field_name == "bump":
            if value < 0:
                raise ValueError("bump must be >= 0")
        elif not value > 0:
            raise ValueError(f"{info.field_name} must be > 0")
        return value

    @field_validator("tol", "radius")
    @classmethod
    def optional_positive(cls, value: Optional[float], info):
        if value is not None and not value > 0:
            raise ValueError(f"{info.field_name} must be > 0")
        return value

    @field_validator("grid", "coarse_grid", "nodes")
    @classmethod
    def resolution(cls, value: int, info):
        if value < 2:
            raise ValueError(f"{info.field_name} must be >= 2")
        return value

    @field_validator("steps", "metric_steps", "outer_steps", "max_iters")
    @classmethod
    def at_least_one(cls, value: int, info):
        if value < 1:
            raise ValueError(f"{info.field_name} must be >= 1")
        return value

    @field_validator("policy")
    @classmethod
    def known_policy(cls, value: str):
        if value not in ("strict", "project"):
            raise ValueError("policy must be 'strict' or 'project'")
        return value

    @field_validator("kind")
    @classmethod
    def known_kind(cls, value: str):
        if value not in ("ambient", "gmod", "induced-flat"):
            raise ValueError("kind must be 'ambient', 'gmod' or 'induced-flat'")
        return value

    @field_validator("objective")
    @classmethod
    def known_objective(cls, value: str):
        if value not in ("length", "energy"):
            raise ValueError("objective must be 'length' or 'energy'")
        return value

    @model_validator(mode="after")
    def finite_vectors(self):
        for name in ("base", "v0", "start", "end"):
            values = getattr(self, name)
            if values is not None and any(v != v or v in (float("inf"), float("-inf")) for v in values):
                raise ValueError(f"{name} must be finite")
        return self


# ============================================================================
# REPORTS
# ============================================================================

class DiscrepancyNote(BaseModel):
    topic: str
    published: str
    derived: str
    resolution: str


class GaussReport(BaseModel):
    metric: str
    domain: str
    grid: int
    nodes: int
    max_residual: Optional[float] = None
    argmax_w: Optional[List[float]] = None
    argmax_z: Optional[List[float]] = None
    tolerance: float
    verdict: str  # PASS, FAIL or NOT_RIEMANNIAN_ON_DOMAIN
    pd_failure_at: Optional[List[float]] = None
    detail: Optional[str] = None


class GaussCheckSummary(GaussReport):
    command: str = "gauss-check"
    config: Dict[str, Any] = {}


class CheckResult(BaseModel):
    name: str
    value: Optional[float] = None
    tolerance: Optional[float] = None
    verdict: str
    detail: Optional[str] = None


class StageReport(BaseModel):
    stage: str
    title: str
    verdict: str  # PASS, FAIL or SKIPPED
    checks: List[CheckResult] = []
    detail: Optional[str] = None


class TheoremReport(BaseModel):
    command: str = "verify-theorem"
    system: str
    metric: str
    verdict: str
    stages: List[StageReport]
    notes: List[DiscrepancyNote] = []
    config: Dict[str, Any] = {}


class SimulateSummary(BaseModel):
    command: str = "simulate"
    system: str
    rows: int
    endpoint: List[float]
    speed_drift: float
    max_constraint_residual: float
    reparam_residual: float
    csv: str
    config: Dict[str, Any] = {}


class ExpGridSummary(BaseModel):
    command: str = "expmap-grid"
    system: str
    points: int
    domain: str
    tangent_map_residual: float
    max_velocity_identity_residual: float
    max_oracle_error: Optional[float] = None
    csv: str
    config: Dict[str, Any] = {}


class PullbackSummary(BaseModel):
    command: str = "pullback"
    system: str
    kind: str
    points: int
    max_derived_delta: Optional[float] = None
    max_published_delta: Optional[float] = None
    csv: str
    config: Dict[str, Any] = {}


class MinimizeSummary(BaseModel):
    command: str = "minimize"
    metric: str
    initial_length: float
    final_length: float
    expected_length: Optional[float] = None
    sup_distance_to_line: float
    iterations: int
    converged: bool
    status: str
    monotone: bool
    csv: str
    config: Dict[str, Any] = {}


class ConsolidatedReport(BaseModel):
    command: str = "report"
    runs: Dict[str, Dict[str, Any]]
    stages: Dict[str, str] = {}
    notes: List[DiscrepancyNote] = []
    figures: List[str] = []
    config: Dict[str, Any] = {}
