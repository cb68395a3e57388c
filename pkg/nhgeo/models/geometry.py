"""
Domain types: chart points, metric and constraint fields, systems,
trajectories, tangent charts, exponential-map patches and curves.

Array-valued fields are stored as float numpy arrays; every type is an
immutable value (frozen dataclass) that may be shared freely.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from nhgeo.core.errors import ConfigError, NonFiniteError


def _as_vector(values, what: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ConfigError(f"{what} must be a non-empty vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{what} has non-finite entries: {arr.tolist()}")
    arr.setflags(write=False)
    return arr


class SignaturePolicy(str, Enum):
    REQUIRE_POSITIVE_DEFINITE = "require-positive-definite"
    ALLOW_INDEFINITE = "allow-indefinite"


class VelocityPolicy(str, Enum):
    """How an initial velocity outside the constraint distribution is treated."""

    STRICT = "strict"
    PROJECT = "project"


@dataclass(frozen=True, eq=False)
class ChartPoint:
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", _as_vector(self.coords, "ChartPoint coords"))

    @property
    def dim(self) -> int:
        return self.coords.size


@dataclass(frozen=True, eq=False)
class TangentVector:
    base: ChartPoint
    comps: np.ndarray

    def __post_init__(self):
        comps = _as_vector(self.comps, "TangentVector comps")
        if comps.size != self.base.dim:
            raise ConfigError(
                f"TangentVector has {comps.size} components but its base has dimension {self.base.dim}"
            )
        object.__setattr__(self, "comps", comps)


# ============================================================================
# FIELDS
# ============================================================================

@dataclass(frozen=True, eq=False)
class MetricField:
    """
    Metric tensor field on an n-dimensional chart.

    `evaluate` maps points (..., n) to matrices (..., n, n); `partials`, when
    given, maps points to (..., n, n, n) with [..., i, :, :] the derivative
    along coordinate i. Evaluators declared `vectorized=False` accept a single
    point only and are looped over by the services.
    """

    dim: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    partials: Optional[Callable[[np.ndarray], np.ndarray]] = None
    signature_policy: SignaturePolicy = SignaturePolicy.REQUIRE_POSITIVE_DEFINITE
    vectorized: bool = True
    name: str = "metric"
    fd_step: Optional[float] = None
    fd_order: int = 2

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError(f"Metric dimension must be >= 1, got {self.dim}")
        if self.fd_order not in (2, 4):
            raise ConfigError(f"fd_order must be 2 or 4, got {self.fd_order}")


@dataclass(frozen=True, eq=False)
class ConstraintField:
    """Constraint one-forms A(q) of shape (..., m, n); D_q = ker A(q)."""

    dim: int
    corank: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    partials: Optional[Callable[[np.ndarray], np.ndarray]] = None
    vectorized: bool = True
    name: str = "constraint"

    def __post_init__(self):
        if self.corank < 0 or self.dim - self.corank < 1:
            raise ConfigError(
                f"Constraint of corank {self.corank} leaves no distribution in dimension {self.dim}"
            )

    @property
    def rank(self) -> int:
        """Dimension k of the distribution."""
        return self.dim - self.corank


@dataclass(frozen=True, eq=False)
class DomainSpec:
    """
    Starshaped domain about 0 in R^k.

    kind "ball" uses `radius` and `norm` ("euclidean" or "max"); kind
    "predicate" uses a batched membership test and `radius` only as the
    half-width of the box sampled by grids. Containment is closed.
    `margin` is the fraction of the radius excluded from sweep grids.
    """

    kind: str = "ball"
    radius: float = 1.0
    norm: str = "euclidean"
    predicate: Optional[Callable[[np.ndarray], np.ndarray]] = None
    margin: float = 0.05

    def __post_init__(self):
        if self.kind not in ("ball", "predicate"):
            raise ConfigError(f"Unknown domain kind '{self.kind}'")
        if self.norm not in ("euclidean", "max"):
            raise ConfigError(f"Unknown domain norm '{self.norm}'")
        if not self.radius > 0:
            raise ConfigError(f"Domain radius must be > 0, got {self.radius}")
        if not 0.0 <= self.margin < 1.0:
            raise ConfigError(f"Domain margin must lie in [0, 1), got {self.margin}")
        if self.kind == "predicate" and self.predicate is None:
            raise ConfigError("Predicate domain requires a predicate")

    @classmethod
    def ball(cls, radius: float, norm: str = "euclidean", margin: float = 0.05) -> "DomainSpec":
        return cls(kind="ball", radius=float(radius), norm=norm, margin=margin)

    @classmethod
    def from_predicate(
        cls, predicate: Callable[[np.ndarray], np.ndarray], radius: float, margin: float = 0.05
    ) -> "DomainSpec":
        return cls(kind="predicate", radius=float(radius), predicate=predicate, margin=margin)

    def norm_of(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if self.norm == "max":
            return np.max(np.abs(w), axis=-1)
        return np.linalg.norm(w, axis=-1)

    def contains(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if self.kind == "ball":
            return self.norm_of(w) <= self.radius
        return np.asarray(self.predicate(w), dtype=bool)

    def contains_interior(self, w: np.ndarray) -> np.ndarray:
        """Membership in the domain shrunk radially by the margin."""
        w = np.asarray(w, dtype=float)
        if self.kind == "ball":
            # grid nodes sit exactly on the shrunk boundary; keep them despite rounding
            return self.norm_of(w) <= self.radius * (1.0 - self.margin) * (1.0 + 1e-12)
        return self.contains(w / (1.0 - self.margin))

    def scaled(self, factor: float) -> "DomainSpec":
        """Domain scaled about 0 by factor."""
        if self.kind == "ball":
            return replace(self, radius=self.radius * factor)
        inner = self.predicate
        return replace(self, radius=self.radius * factor, predicate=lambda w: inner(np.asarray(w) / factor))

    def grid(self, points_per_axis: int, k: int) -> np.ndarray:
        """
        Uniform product grid over [-(r - e), r - e]^k filtered by interior membership.

        Args:
            points_per_axis: Grid resolution (>= 2)
            k: Dimension

        Returns:
            np.ndarray: Grid nodes of shape (N, k)
        """
        if points_per_axis < 2:
            raise ConfigError(f"Grid resolution must be >= 2, got {points_per_axis}")
        half = self.radius * (1.0 - self.margin)
        axis = np.linspace(-half, half, points_per_axis)
        mesh = np.meshgrid(*([axis] * k), indexing="ij")
        nodes = np.stack([m.ravel() for m in mesh], axis=-1)
        return nodes[self.contains_interior(nodes)]

    def describe(self) -> str:
        if self.kind == "ball":
            return f"ball(radius={self.radius:g}, norm={self.norm})"
        return f"predicate(radius={self.radius:g})"


@dataclass(frozen=True, eq=False)
class VectorMetric(MetricField):
    """
    Metric on (a domain of) R^k, such as G, G_0 or a pushed-forward g^nh.

    `analytic` marks metrics evaluated to roundoff (closed forms); metrics
    built from integrated maps are not analytic and get looser default
    tolerances.
    """

    domain: Optional[DomainSpec] = None
    analytic: bool = True

    @property
    def k(self) -> int:
        return self.dim


# ============================================================================
# SYSTEMS AND TRAJECTORIES
# ============================================================================

@dataclass(frozen=True, eq=False)
class NonholonomicSystem:
    name: str
    g: MetricField
    A: ConstraintField

    def __post_init__(self):
        if self.g.dim != self.A.dim:
            raise ConfigError(
                f"System '{self.name}': metric dimension {self.g.dim} != constraint dimension {self.A.dim}"
            )

    @property
    def chart_dim(self) -> int:
        return self.g.dim

    @property
    def rank(self) -> int:
        return self.A.rank


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Samples (t, q, v) of an integrated curve with its diagnostics."""

    times: np.ndarray
    q: np.ndarray
    v: np.ndarray
    speeds: np.ndarray
    constraint_residuals: np.ndarray
    speed_drift: float
    max_constraint_residual: float

    def __post_init__(self):
        if self.q.ndim != 2 or self.q.shape != self.v.shape or self.q.shape[0] != self.times.size:
            raise ConfigError(
                f"Inconsistent trajectory shapes: t {self.times.shape}, q {self.q.shape}, v {self.v.shape}"
            )
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ConfigError("Trajectory times must be strictly increasing")

    def __len__(self) -> int:
        return self.times.size

    @property
    def endpoint(self) -> np.ndarray:
        return self.q[-1]

    @property
    def final_velocity(self) -> np.ndarray:
        return self.v[-1]

    def samples(self):
        return [(float(t), ChartPoint(q), v.copy()) for t, q, v in zip(self.times, self.q, self.v)]


# ============================================================================
# EXPONENTIAL MAP
# ============================================================================

@dataclass(frozen=True, eq=False)
class TangentChart:
    """Identification of D_base with R^k through the columns of `basis` (n x k)."""

    base: ChartPoint
    basis: np.ndarray
    labels: Tuple[str, ...] = ()

    def __post_init__(self):
        basis = np.array(self.basis, dtype=float)
        if basis.ndim != 2 or basis.shape[0] != self.base.dim:
            raise ConfigError(f"Basis shape {basis.shape} does not match base dimension {self.base.dim}")
        if np.linalg.matrix_rank(basis) < basis.shape[1]:
            raise ConfigError("Tangent chart basis columns are linearly dependent")
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        labels = tuple(self.labels) or tuple(f"w{i + 1}" for i in range(basis.shape[1]))
        if len(labels) != basis.shape[1]:
            raise ConfigError(f"Expected {basis.shape[1]} labels, got {len(labels)}")
        object.__setattr__(self, "labels", labels)

    @property
    def k(self) -> int:
        return self.basis.shape[1]

    def to_velocity(self, w: np.ndarray) -> np.ndarray:
        """Fiber coordinates (..., k) to ambient velocities (..., n)."""
        return np.asarray(w, dtype=float) @ self.basis.T


@dataclass(frozen=True, eq=False)
class ExpMapPatch:
    sys: NonholonomicSystem
    chart: TangentChart
    domain: DomainSpec
    steps: int = 1000

    def __post_init__(self):
        if self.steps < 1:
            raise ConfigError(f"Patch integrator steps must be >= 1, got {self.steps}")
        if not bool(self.domain.contains(np.zeros(self.chart.k))):
            raise ConfigError("Exponential-map domain must contain 0")

    @property
    def k(self) -> int:
        return self.chart.k

    @property
    def base(self) -> np.ndarray:
        return self.chart.base.coords


@dataclass(frozen=True, eq=False)
class InverseResult:
    """Outcome of a Newton inversion; arrays carry the batch shape of the target."""

    w: np.ndarray
    selected_residual: np.ndarray
    full_residual: np.ndarray
    iterations: int
    converged: bool


# ============================================================================
# CURVES AND REGISTRY
# ============================================================================

@dataclass(frozen=True, eq=False)
class DiscreteCurve:
    nodes: np.ndarray
    fixed_start: bool = True
    fixed_end: bool = True

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 2 or nodes.shape[0] < 2:
            raise ConfigError(f"A discrete curve needs >= 2 nodes of equal dimension, got shape {nodes.shape}")
        if not np.all(np.isfinite(nodes)):
            raise NonFiniteError("Discrete curve has non-finite nodes")
        object.__setattr__(self, "nodes", nodes)

    def __len__(self) -> int:
        return self.nodes.shape[0]

    @property
    def start(self) -> np.ndarray:
        return self.nodes[0]

    @property
    def end(self) -> np.ndarray:
        return self.nodes[-1]


@dataclass(frozen=True, eq=False)
class SystemRegistryEntry:
    """
    A built-in system with its default chart, domains and closed-form oracles.

    `exp_closed` and `exp_jacobian` are batched maps on fiber coordinates;
    `induced_select` names the ambient coordinates used as induced
    coordinates on the image of the exponential map.
    """

    id: str
    system: NonholonomicSystem
    base_point: ChartPoint
    chart: TangentChart
    patch_domain: DomainSpec
    gauss_domain: DomainSpec
    induced_select: Tuple[int, ...]
    exp_closed: Optional[Callable[[np.ndarray], np.ndarray]] = None
    exp_jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    closed_metrics: Dict[str, Callable] = field(default_factory=dict)
    params: Dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class MinimizeOptions:
    """Options of the discrete length minimizer."""

    objective: str = "length"
    max_iters: int = 5000
    grad_tol: float = 1e-6
    fd_step: float = 1e-6
    resample: bool = True

    def __post_init__(self):
        if self.objective not in ("length", "energy"):
            raise ConfigError(f"Unknown objective '{self.objective}'; use 'length' or 'energy'")
        if self.max_iters < 1 or not self.grad_tol > 0 or not self.fd_step > 0:
            raise ConfigError("max_iters must be >= 1 and grad_tol, fd_step > 0")


@dataclass(frozen=True, eq=False)
class MinimizationResult:
    curve: DiscreteCurve
    lengths: np.ndarray
    iterations: int
    converged: bool
    status: str
    grad_norm: float

    @property
    def initial_length(self) -> float:
        return float(self.lengths[0])

    @property
    def final_length(self) -> float:
        return float(self.lengths[-1])
