from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union
import enum

import numpy as np

from ctrplan.utils.exceptions import InvalidScenarioError


# Enums
class BodyRole(str, enum.Enum):
    OBJECT = "object"
    ROBOT = "robot"
    STATIC = "static"


class DofKind(str, enum.Enum):
    TRANSLATION = "translation"
    ROTATION = "rotation"


class ContactMode(str, enum.Enum):
    SEPARATION = "separation"
    STICKING = "sticking"
    SLIDING_POS = "sliding+"
    SLIDING_NEG = "sliding-"


Pose = Tuple[float, float, float]


# Collision geometries
@dataclass(frozen=True)
class Circle:
    radius: float

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise InvalidScenarioError(f"circle radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class Box:
    half_extents: Tuple[float, float]

    def __post_init__(self) -> None:
        if min(self.half_extents) <= 0:
            raise InvalidScenarioError(
                f"box half-extents must be positive, got {self.half_extents}"
            )


@dataclass(frozen=True)
class HalfPlane:
    """Solid region {p : n . p <= offset} in the body frame; n is the outward unit normal."""

    normal: Tuple[float, float]
    offset: float = 0.0

    def __post_init__(self) -> None:
        if abs(np.hypot(*self.normal) - 1.0) > 1e-9:
            raise InvalidScenarioError(f"half-plane normal must be unit length, got {self.normal}")


@dataclass(frozen=True)
class UnionMember:
    box: Box
    pose: Pose = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class BoxUnion:
    """Rigid union of boxes; members are posed in the body frame."""

    members: Tuple[UnionMember, ...]

    def __post_init__(self) -> None:
        if not self.members:
            raise InvalidScenarioError("box union needs at least one member")


Geometry = Union[Circle, Box, HalfPlane, BoxUnion]


# Joints
@dataclass(frozen=True)
class PlanarJoint:
    """Free planar pose; each of (x, y, theta) is a configuration index or a fixed value."""

    indices: Tuple[Optional[int], Optional[int], Optional[int]] = (None, None, None)
    fixed: Pose = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class RevoluteChain:
    """Serial revolute chain; the body frame sits at the end of the last link."""

    base: Pose
    link_lengths: Tuple[float, ...]
    joint_indices: Tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.link_lengths) != len(self.joint_indices):
            raise InvalidScenarioError("revolute chain needs one joint index per link")
        if min(self.link_lengths) <= 0:
            raise InvalidScenarioError("link lengths must be positive")


Joint = Union[PlanarJoint, RevoluteChain]


@dataclass(frozen=True)
class Body:
    name: str
    role: BodyRole
    geometry: Geometry
    joint: Joint = field(default_factory=PlanarJoint)

    @property
    def dof_indices(self) -> Tuple[int, ...]:
        if isinstance(self.joint, RevoluteChain):
            return tuple(self.joint.joint_indices)
        return tuple(i for i in self.joint.indices if i is not None)


@dataclass(frozen=True)
class ContactPair:
    body_a: int
    body_b: int
    mu: float = 0.0

    @property
    def cone_dim(self) -> int:
        return 1 if self.mu == 0.0 else 2


# System
@dataclass(frozen=True, eq=False)
class SystemModel:
    name: str
    bodies: Tuple[Body, ...]
    pairs: Tuple[ContactPair, ...]
    object_indices: Tuple[int, ...]
    robot_indices: Tuple[int, ...]
    stiffness: np.ndarray
    object_mass: np.ndarray
    epsilon: float = 1.0
    h: float = 0.1
    tau_object: Optional[np.ndarray] = None
    tau_robot: Optional[np.ndarray] = None
    phi_threshold: float = 0.2
    object_dof_kinds: Tuple[DofKind, ...] = ()
    joint_lower: Optional[np.ndarray] = None
    joint_upper: Optional[np.ndarray] = None
    torque_lower: Optional[np.ndarray] = None
    torque_upper: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        n_q = len(self.object_indices) + len(self.robot_indices)
        if sorted(self.object_indices + self.robot_indices) != list(range(n_q)):
            raise InvalidScenarioError(
                "object and robot index sets must be disjoint and cover 0..n_q-1"
            )
        stiffness = np.asarray(self.stiffness, dtype=float).reshape(-1)
        if stiffness.shape != (len(self.robot_indices),) or np.any(stiffness <= 0):
            raise InvalidScenarioError("stiffness needs one positive entry per robot DOF")
        mass = np.asarray(self.object_mass, dtype=float).reshape(self.n_qo, -1)
        if mass.shape != (self.n_qo, self.n_qo):
            raise InvalidScenarioError("object mass matrix has the wrong shape")
        if self.n_qo and (
            not np.allclose(mass, mass.T) or np.any(np.linalg.eigvalsh(mass) <= 0)
        ):
            raise InvalidScenarioError("object mass matrix must be symmetric positive definite")
        if self.h <= 0:
            raise InvalidScenarioError(f"step size h must be positive, got {self.h}")
        if self.epsilon < 0:
            raise InvalidScenarioError(f"regularization epsilon must be >= 0, got {self.epsilon}")
        for pair in self.pairs:
            if pair.mu < 0:
                raise InvalidScenarioError(f"friction coefficient must be >= 0, got {pair.mu}")
        object.__setattr__(self, "stiffness", stiffness)
        object.__setattr__(self, "object_mass", mass)
        for name, size in (("tau_object", self.n_qo), ("tau_robot", self.n_qa)):
            value = getattr(self, name)
            object.__setattr__(
                self, name, np.zeros(size) if value is None else np.asarray(value, float)
            )
        kinds = self.object_dof_kinds or tuple(DofKind.TRANSLATION for _ in self.object_indices)
        if len(kinds) != self.n_qo:
            raise InvalidScenarioError("object_dof_kinds needs one entry per object DOF")
        object.__setattr__(self, "object_dof_kinds", tuple(DofKind(k) for k in kinds))
        for name in ("joint_lower", "joint_upper", "torque_lower", "torque_upper"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, np.asarray(value, dtype=float).reshape(-1))

    @property
    def n_q(self) -> int:
        return len(self.object_indices) + len(self.robot_indices)

    @property
    def n_qo(self) -> int:
        return len(self.object_indices)

    @property
    def n_qa(self) -> int:
        return len(self.robot_indices)

    @property
    def object_idx(self) -> np.ndarray:
        return np.asarray(self.object_indices, dtype=int)

    @property
    def robot_idx(self) -> np.ndarray:
        return np.asarray(self.robot_indices, dtype=int)

    @property
    def scaled_object_mass(self) -> np.ndarray:
        """epsilon * M_o / h^2, the object block of the dynamics cost."""
        return self.epsilon * self.object_mass / self.h**2

    def split(self, q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        q = np.asarray(q, dtype=float)
        return q[self.object_idx], q[self.robot_idx]

    def compose(self, q_object: np.ndarray, q_robot: np.ndarray) -> np.ndarray:
        q = np.zeros(self.n_q)
        q[self.object_idx] = q_object
        q[self.robot_idx] = q_robot
        return q

    def body_index(self, name: str) -> int:
        for i, body in enumerate(self.bodies):
            if body.name == name:
                return i
        raise KeyError(name)

    def pair_kind(self, pair: ContactPair) -> Tuple[BodyRole, BodyRole]:
        return self.bodies[pair.body_a].role, self.bodies[pair.body_b].role

    def is_robot_object_pair(self, pair: ContactPair) -> bool:
        return set(self.pair_kind(pair)) == {BodyRole.OBJECT, BodyRole.ROBOT}

    def involves_robot(self, pair: ContactPair) -> bool:
        return BodyRole.ROBOT in self.pair_kind(pair)

    def object_pose_error(self, q_object: np.ndarray, q_goal: np.ndarray) -> Tuple[float, float]:
        """(translation error, rotation error) between two object configurations."""
        diff = np.asarray(q_object, float) - np.asarray(q_goal, float)
        trans = [d for d, k in zip(diff, self.object_dof_kinds) if k == DofKind.TRANSLATION]
        rot = [wrap_angle(d) for d, k in zip(diff, self.object_dof_kinds) if k == DofKind.ROTATION]
        return float(np.linalg.norm(trans)), float(np.linalg.norm(rot))

    def object_difference(self, q_goal: np.ndarray, q_object: np.ndarray) -> np.ndarray:
        """q_goal - q_object with rotational DOFs wrapped to (-pi, pi]."""
        diff = np.asarray(q_goal, float) - np.asarray(q_object, float)
        for i, kind in enumerate(self.object_dof_kinds):
            if kind == DofKind.ROTATION:
                diff[i] = wrap_angle(diff[i])
        return diff


def wrap_angle(angle: float) -> float:
    wrapped = (angle + np.pi) % (2.0 * np.pi) - np.pi
    if wrapped == -np.pi:
        return float(np.pi)
    return float(wrapped)


# Contact kinematics
@dataclass(frozen=True, eq=False)
class ContactKinematics:
    pair_index: int
    phi: float
    cone_dim: int
    mu: float
    J: np.ndarray
    c: np.ndarray
    normal: np.ndarray
    witness_a: np.ndarray
    witness_b: np.ndarray

    @property
    def J_n(self) -> np.ndarray:
        return self.J[0]

    @property
    def J_t(self) -> np.ndarray:
        return self.J[1:]

    def J_o(self, system: SystemModel) -> np.ndarray:
        return self.J[:, system.object_idx]

    def J_a(self, system: SystemModel) -> np.ndarray:
        return self.J[:, system.robot_idx]


# Trajectories
@dataclass(eq=False)
class Trajectory:
    """Rollout log: configurations q_0..T, inputs u_0..T-1, contact forces and stage costs."""

    configurations: List[np.ndarray] = field(default_factory=list)
    inputs: List[np.ndarray] = field(default_factory=list)
    forces: List[Dict[int, np.ndarray]] = field(default_factory=list)
    costs: List[float] = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return len(self.inputs)

    @property
    def final(self) -> np.ndarray:
        return self.configurations[-1]

    def rows(self, n_pairs: int) -> List[List[float]]:
        """Flat rows (t, q..., u..., normal force per pair) for CSV traces."""
        rows = []
        width = len(self.inputs[0]) if self.inputs else 0
        for t, q in enumerate(self.configurations):
            u = self.inputs[t] if t < len(self.inputs) else np.full(width, np.nan)
            forces = self.forces[t] if t < len(self.forces) else {}
            normal = [float(forces[i][0]) if i in forces else 0.0 for i in range(n_pairs)]
            rows.append([float(t), *map(float, q), *map(float, u), *normal])
        return rows
