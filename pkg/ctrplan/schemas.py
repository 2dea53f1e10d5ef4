import hashlib
import json
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ctrplan.models import BodyRole, DofKind


SCHEMA_VERSION = "1"


# Geometry Schemas
class CircleDoc(BaseModel):
    type: Literal["circle"] = "circle"
    radius: float = Field(..., gt=0)


class BoxDoc(BaseModel):
    type: Literal["box"] = "box"
    half_extents: List[float] = Field(..., min_length=2, max_length=2)


class HalfPlaneDoc(BaseModel):
    type: Literal["halfplane"] = "halfplane"
    normal: List[float] = Field(..., min_length=2, max_length=2)
    offset: float = 0.0


class UnionMemberDoc(BaseModel):
    half_extents: List[float] = Field(..., min_length=2, max_length=2)
    pose: List[float] = Field(default_factory=lambda: [0.0, 0.0, 0.0], min_length=3, max_length=3)


class BoxUnionDoc(BaseModel):
    type: Literal["box_union"] = "box_union"
    members: List[UnionMemberDoc] = Field(..., min_length=1)


GeometryDoc = Annotated[
    Union[CircleDoc, BoxDoc, HalfPlaneDoc, BoxUnionDoc], Field(discriminator="type")
]


# Joint Schemas
class PlanarJointDoc(BaseModel):
    type: Literal["planar"] = "planar"
    indices: List[Optional[int]] = Field(
        default_factory=lambda: [None, None, None], min_length=3, max_length=3
    )
    fixed: List[float] = Field(default_factory=lambda: [0.0, 0.0, 0.0], min_length=3, max_length=3)


class RevoluteChainDoc(BaseModel):
    type: Literal["revolute_chain"] = "revolute_chain"
    base: List[float] = Field(..., min_length=3, max_length=3)
    link_lengths: List[float] = Field(..., min_length=1)
    joint_indices: List[int] = Field(..., min_length=1)


JointDoc = Annotated[Union[PlanarJointDoc, RevoluteChainDoc], Field(discriminator="type")]


# System Schemas
class BodyDoc(BaseModel):
    name: str = Field(..., min_length=1)
    role: BodyRole
    geometry: GeometryDoc
    joint: JointDoc = Field(default_factory=PlanarJointDoc)


class PairDoc(BaseModel):
    body_a: str
    body_b: str
    mu: float = Field(0.0, ge=0)


class SystemDoc(BaseModel):
    bodies: List[BodyDoc] = Field(..., min_length=1)
    pairs: List[PairDoc] = Field(default_factory=list)
    object_indices: List[int]
    robot_indices: List[int]
    object_dof_kinds: List[DofKind] = Field(default_factory=list)
    stiffness: List[float]
    object_mass: List[List[float]]
    epsilon: float = Field(1.0, ge=0)
    h: float = Field(0.1, gt=0)
    tau_object: Optional[List[float]] = None
    tau_robot: Optional[List[float]] = None
    phi_threshold: float = Field(0.2, gt=0)
    joint_lower: Optional[List[float]] = None
    joint_upper: Optional[List[float]] = None
    torque_lower: Optional[List[float]] = None
    torque_upper: Optional[List[float]] = None

    @model_validator(mode="after")
    def check_pair_names(self) -> "SystemDoc":
        names = [body.name for body in self.bodies]
        if len(set(names)) != len(names):
            raise ValueError("body names must be unique")
        for pair in self.pairs:
            for name in (pair.body_a, pair.body_b):
                if name not in names:
                    raise ValueError(f"contact pair references unknown body '{name}'")
        return self


# Parameter Schemas
class TrustRegionParams(BaseModel):
    variant: Literal["etr", "ctr", "r-ctr", "a-etr", "a-ctr", "ra-ctr"] = "ra-ctr"
    radius: float = Field(0.05, gt=0)
    kappa: float = Field(100.0, gt=0)


class PlannerParams(BaseModel):
    horizon: int = Field(1, ge=1)  # T
    max_iterations: int = Field(2, ge=1)  # n_max
    rollout_horizon: int = Field(10, ge=1)  # H
    goal_weights: List[float] = Field(..., min_length=1)  # Q over object DOFs
    robot_goal_weights: Optional[List[float]] = None
    action_weights: List[float] = Field(..., min_length=1)  # R
    input_bound: float = Field(0.05, gt=0)  # eta
    trust_region: TrustRegionParams = Field(default_factory=TrustRegionParams)
    replan_count: int = Field(1, ge=1)  # N
    convergence_tol: float = Field(1e-6, gt=0)
    project_every_step: bool = True

    @field_validator("goal_weights", "action_weights", "robot_goal_weights")
    @classmethod
    def check_weights(cls, v: Optional[List[float]]) -> Optional[List[float]]:
        if v is not None and any(w < 0 for w in v):
            raise ValueError("weights must be nonnegative")
        return v


class GraspParams(BaseModel):
    alpha: float = Field(0.0, ge=0)
    samples: int = Field(100, ge=1)
    hull_samples: int = Field(1000, ge=10)
    goal_scale: float = Field(4.0, gt=0)


class SymmetryDoc(BaseModel):
    """Affine configuration map q -> S q + s."""

    name: str
    matrix: List[List[float]]
    offset: List[float]


# Scenario Schemas
class ScenarioDocument(BaseModel):
    schema_version: str = SCHEMA_VERSION
    name: str = Field(..., min_length=1)
    description: Optional[str] = None
    system: SystemDoc
    q0: List[float]
    goal: Optional[List[float]] = None
    planner: PlannerParams
    grasp: GraspParams = Field(default_factory=GraspParams)
    symmetries: List[SymmetryDoc] = Field(default_factory=list)
    stable_poses: List[List[float]] = Field(default_factory=list)
    base_grasps: List[List[float]] = Field(default_factory=list)

    model_config = ConfigDict(extra="forbid")

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def content_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


# Roadmap Schemas
class EdgeDoc(BaseModel):
    source: int
    target: int
    length: float
    configurations: List[List[float]]
    inputs: List[List[float]]
    symmetry: Optional[str] = None


class RoadmapDocument(BaseModel):
    schema_version: str = SCHEMA_VERSION
    scenario: str
    scenario_hash: str
    seed: int
    tool_version: str
    vertices: List[List[float]]
    base_vertex_count: int
    edges: List[EdgeDoc] = Field(default_factory=list)


# Manifest Schemas
class ArtifactEntry(BaseModel):
    name: str
    sha256: str
    bytes: int


class RunManifest(BaseModel):
    schema_version: str = SCHEMA_VERSION
    command: str
    argv: List[str]
    seed: int
    scenario: Optional[str] = None
    scenario_hash: Optional[str] = None
    tool_version: str
    artifacts: List[ArtifactEntry] = Field(default_factory=list)
