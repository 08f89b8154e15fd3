import math
from enum import Enum
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator
from typing_extensions import Annotated, Self

from tomography.utils.geometry import kite_curve, polygon_area_centroid, polygon_contains

TWO_PI = 2.0 * math.pi
ARC_TOLERANCE = 1e-12

Point = Tuple[float, float]


class BoundaryArc(BaseModel):
    """Angular interval (theta1, theta2) of the unit circle used as Neumann and Dirichlet boundary."""

    model_config = ConfigDict(frozen=True)

    theta1: float = Field(default=0.0, description="Start angle in radians")
    theta2: float = Field(default=TWO_PI, description="End angle in radians")

    @model_validator(mode="after")
    def verify_angles(self) -> Self:
        if not (-ARC_TOLERANCE <= self.theta1 < self.theta2 <= TWO_PI + ARC_TOLERANCE):
            raise ValueError("Boundary arc needs 0 <= theta1 < theta2 <= 2*pi")
        return self

    @computed_field
    @property
    def full(self) -> bool:
        return abs(self.theta2 - self.theta1 - TWO_PI) < ARC_TOLERANCE

    @property
    def length(self) -> float:
        return self.theta2 - self.theta1

    def contains(self, theta: np.ndarray) -> np.ndarray:
        """Strict interior membership; the endpoints are excluded."""
        theta = np.asarray(theta, dtype=float)
        if self.full:
            return np.ones(theta.shape, dtype=bool)
        tol = 1e-10
        return (theta > self.theta1 + tol) & (theta < self.theta2 - tol)

    @classmethod
    def full_boundary(cls) -> "BoundaryArc":
        return cls(theta1=0.0, theta2=TWO_PI)

    @classmethod
    def parse(cls, text: str) -> "BoundaryArc":
        """
        Parse "full" or "THETA1,THETA2" where each angle is a number optionally followed by "pi",
        e.g. "0,pi", "pi,2pi", "0.25pi,0.75pi".
        """
        text = text.strip().lower()
        if text in ("full", ""):
            return cls.full_boundary()
        parts = text.split(",")
        if len(parts) != 2:
            raise ValueError(f"Cannot parse boundary arc '{text}'")
        return cls(theta1=_parse_angle(parts[0]), theta2=_parse_angle(parts[1]))

    def __str__(self) -> str:
        if self.full:
            return "full"
        return f"({self.theta1:.4f},{self.theta2:.4f})"


def _parse_angle(text: str) -> float:
    text = text.strip()
    if text.endswith("pi"):
        factor = text[:-2].strip()
        return (float(factor) if factor else 1.0) * math.pi
    return float(text)


class PatternKind(str, Enum):
    cosine = "cosine"
    sine = "sine"


class NeumannPattern(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: PatternKind = Field(..., description="Trigonometric family of the current pattern")
    n: int = Field(..., ge=1, description="Number of periods on the arc")
    arc: BoundaryArc = Field(default_factory=BoundaryArc.full_boundary)

    @property
    def label(self) -> str:
        return f"{self.kind.value}{self.n}"


class PatternSamples(BaseModel):
    theta: List[float] = Field(..., description="Angles of the Dirichlet sample nodes on the measurement arc")
    values: List[float] = Field(..., description="Dirichlet data f_k at those nodes")

    @model_validator(mode="after")
    def verify_samples(self) -> Self:
        if len(self.theta) != len(self.values):
            raise ValueError("Sample angles and values differ in length")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("Dirichlet samples must be finite")
        return self


class BumpProfile(str, Enum):
    # amplitude * (1 - rho^2)^2, C1 at the seam
    c1 = "c1"
    # amplitude * (1 - rho^2)^3, C2 at the seam
    c2 = "c2"


class DiskInclusion(BaseModel):
    shape: Literal["disk"] = "disk"
    center: Point
    radius: float = Field(..., gt=0)
    contrast: float = Field(default=4.0, description="Additive conductivity jump over the background")

    def extent(self) -> float:
        return math.hypot(*self.center) + self.radius

    def contains(self, points: np.ndarray) -> np.ndarray:
        return np.hypot(points[:, 0] - self.center[0], points[:, 1] - self.center[1]) < self.radius

    def values(self, points: np.ndarray) -> np.ndarray:
        return np.where(self.contains(points), self.contrast, 0.0)


class KiteInclusion(BaseModel):
    shape: Literal["kite"] = "kite"
    center: Point
    scale: float = Field(..., gt=0)
    rotation: float = Field(default=0.0, description="Rotation in radians about the center")
    contrast: float = Field(default=4.0)

    def curve(self, samples: int = 256) -> np.ndarray:
        return kite_curve(self.center, self.scale, self.rotation, samples)

    def extent(self) -> float:
        return float(np.max(np.hypot(*self.curve(1024).T)))

    def contains(self, points: np.ndarray) -> np.ndarray:
        return polygon_contains(points, self.curve())

    def values(self, points: np.ndarray) -> np.ndarray:
        return np.where(self.contains(points), self.contrast, 0.0)


class SmoothBump(BaseModel):
    shape: Literal["smooth_bump"] = "smooth_bump"
    center: Point
    radius: float = Field(..., gt=0)
    amplitude: float = Field(default=2.0)
    profile: BumpProfile = BumpProfile.c1

    def extent(self) -> float:
        return math.hypot(*self.center) + self.radius

    def contains(self, points: np.ndarray) -> np.ndarray:
        return np.hypot(points[:, 0] - self.center[0], points[:, 1] - self.center[1]) < self.radius

    def values(self, points: np.ndarray) -> np.ndarray:
        rho = np.hypot(points[:, 0] - self.center[0], points[:, 1] - self.center[1]) / self.radius
        power = 2 if self.profile == BumpProfile.c1 else 3
        return np.where(rho < 1.0, self.amplitude * np.clip(1.0 - rho**2, 0.0, None) ** power, 0.0)


Inclusion = Annotated[Union[DiskInclusion, KiteInclusion, SmoothBump], Field(discriminator="shape")]


class PhantomSpec(BaseModel):
    background: float = Field(default=1.0, gt=0, description="Constant background conductivity sigma_0")
    inclusions: List[Inclusion] = Field(default=[], description="Inclusions added on top of the background")

    @model_validator(mode="after")
    def verify_inclusions(self) -> Self:
        for inclusion in self.inclusions:
            if inclusion.extent() >= 1.0:
                raise ValueError(f"Inclusion {inclusion.shape} at {inclusion.center} reaches the boundary")
        return self

    def support_contains(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        inside = np.zeros(len(points), dtype=bool)
        for inclusion in self.inclusions:
            inside |= inclusion.contains(points)
        return inside


class DiskRegion(BaseModel):
    kind: Literal["disk"] = "disk"
    center: Point
    radius: float = Field(..., gt=0)

    def centroid(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)

    def dilated(self, factor: float) -> "DiskRegion":
        return self.model_copy(update={"radius": self.radius * factor})

    def contains(self, points: np.ndarray) -> np.ndarray:
        # closed ball, so nodes exactly on the circle count as inside
        return np.hypot(points[:, 0] - self.center[0], points[:, 1] - self.center[1]) <= self.radius * (1 + 1e-12)


class PolygonRegion(BaseModel):
    kind: Literal["polygon"] = "polygon"
    vertices: List[Point] = Field(..., min_length=3)

    def centroid(self) -> np.ndarray:
        return polygon_area_centroid(np.asarray(self.vertices, dtype=float))[1]

    def dilated(self, factor: float) -> "PolygonRegion":
        center = self.centroid()
        vertices = center + factor * (np.asarray(self.vertices, dtype=float) - center)
        return self.model_copy(update={"vertices": [tuple(v) for v in vertices.tolist()]})

    def contains(self, points: np.ndarray) -> np.ndarray:
        return polygon_contains(points, np.asarray(self.vertices, dtype=float))


class UnionRegion(BaseModel):
    kind: Literal["union"] = "union"
    members: List[Annotated[Union[DiskRegion, PolygonRegion], Field(discriminator="kind")]] = Field(
        ..., min_length=1
    )

    def centroid(self) -> np.ndarray:
        return np.mean([member.centroid() for member in self.members], axis=0)

    def dilated(self, factor: float) -> "UnionRegion":
        # each component is scaled about its own centroid
        return self.model_copy(update={"members": [member.dilated(factor) for member in self.members]})

    def contains(self, points: np.ndarray) -> np.ndarray:
        inside = np.zeros(len(points), dtype=bool)
        for member in self.members:
            inside |= member.contains(points)
        return inside


Region = Annotated[Union[DiskRegion, PolygonRegion, UnionRegion], Field(discriminator="kind")]


class PriorMask(BaseModel):
    region: Optional[Region] = Field(default=None, description="Assumed support of the perturbation; None is no prior")
    mu_in: float = Field(default=1e-2, gt=0, le=1, description="Weight inside the assumed support")
    mu_out: float = Field(default=1.0, gt=0, le=1, description="Weight outside the assumed support")
    dilation: float = Field(default=0.0, description="Relative dilation delta r of the region about its centroid")

    @field_validator("dilation")
    @classmethod
    def verify_dilation(cls, value: float) -> float:
        if 1.0 + value <= 0.0:
            raise ValueError("Dilation factor 1 + delta_r must be positive")
        return value


class RefinementSchedule(BaseModel):
    enabled: bool = Field(default=False, description="Refine the mesh where |grad delta_gamma| is large")
    fraction: float = Field(default=0.1, gt=0, le=1, description="Share of triangles refined per round")
    every: int = Field(default=10, ge=1, description="Accepted iterations between refinement rounds")
    max_rounds: int = Field(default=3, ge=0)


class ReconConfig(BaseModel):
    alpha: float = Field(default=1e-3, gt=0, description="Base regularization parameter")
    c: float = Field(default=0.05, gt=0, lt=1, description="Admissibility constant, sigma in [c, 1/c]")
    s_min: float = Field(default=1.0, gt=0)
    s_max: float = Field(default=1000.0, gt=0)
    s_stop: float = Field(default=1e-3, gt=0, description="Stop once the step size falls below this value")
    memory: int = Field(default=5, ge=1, description="Weak monotonicity memory M")
    tau: float = Field(default=1e-5, gt=0, lt=1, description="Weak monotonicity constant")
    max_iters: int = Field(default=500, ge=1)
    refinement: RefinementSchedule = Field(default_factory=RefinementSchedule)
    prior: Optional[PriorMask] = Field(default=None, description="Distributed regularization prior")

    @model_validator(mode="after")
    def verify_steps(self) -> Self:
        if self.s_min > self.s_max:
            raise ValueError("s_min must not exceed s_max")
        return self


class TVConfig(ReconConfig):
    alpha: float = Field(default=5e-4, gt=0, description="TV regularization weight")
    b: float = Field(default=1e-5, gt=0, description="Smoothing constant of the TV penalty")


class ReconMethod(str, Enum):
    sparsity = "sparsity"
    tv = "tv"


class ReconStatus(str, Enum):
    converged = "converged"
    stationary = "stationary"
    max_iters = "max_iters"


class IterationRecord(BaseModel):
    iteration: int
    psi: float
    discrepancy: float
    penalty: float
    step: float
    backtracks: int
    nnz: int
    nodes: int
    step_h1_sq: float = Field(default=0.0, description="Squared H1 norm of the accepted update")
    history_max: float = Field(default=0.0, description="Max of the Psi history the step was tested against")


class CauchyDataSet(BaseModel):
    patterns: List[NeumannPattern] = Field(..., min_length=1)
    samples: List[PatternSamples] = Field(..., description="Dirichlet samples on the measurement arc, one per pattern")
    arc: BoundaryArc = Field(default_factory=BoundaryArc.full_boundary)
    noise_level: float = Field(default=0.0, ge=0, description="Relative noise level epsilon")
    noise_std: float = Field(default=0.0, ge=0, description="Absolute standard deviation of the added noise")
    seed: int = Field(default=0)
    fine_mesh_h: Optional[float] = None
    recon_mesh_h: Optional[float] = None
    phantom: Optional[PhantomSpec] = None

    @model_validator(mode="after")
    def verify_patterns(self) -> Self:
        if len(self.samples) != len(self.patterns):
            raise ValueError("One sample set per Neumann pattern is required")
        return self

    @property
    def size(self) -> int:
        return len(self.patterns)


class MeshDocument(BaseModel):
    nodes: List[Point]
    triangles: List[Tuple[int, int, int]]
    boundary: List[int]
    h: Optional[float] = None


class RunManifest(BaseModel):
    tool_version: str
    command: str
    method: Optional[ReconMethod] = None
    config: Dict = Field(default={}, description="Fully resolved configuration")
    inputs: Dict[str, str] = Field(default={}, description="Input file path to sha256 digest")
    outputs: List[str] = Field(default=[])
    seed: Optional[int] = None
    started_at: str
    runtime_seconds: float = 0.0
    status: Optional[ReconStatus] = None


class SweepRow(BaseModel):
    delta_r: Optional[float] = Field(default=None, description="Prior dilation; None for the run without prior")
    sigma_B: float = Field(..., description="Mean reconstructed conductivity over the true support")
    sigma_max: float = Field(..., description="Largest nodal magnitude of the reconstructed conductivity")
    status: ReconStatus
    iterations: int


class ReportRow(BaseModel):
    run: str
    method: Optional[ReconMethod] = None
    sigma_E: Optional[float] = None
    sigma_max: float
    support_overlap: Optional[float] = None
    runtime_seconds: float
    status: Optional[ReconStatus] = None
