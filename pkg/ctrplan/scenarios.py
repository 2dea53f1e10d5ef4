"""Built-in scenario registry and JSON scenario loading."""
import difflib
import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from ctrplan.config import settings
from ctrplan.models import (
    Body,
    Box,
    BoxUnion,
    Circle,
    ContactPair,
    HalfPlane,
    PlanarJoint,
    RevoluteChain,
    SystemModel,
    UnionMember,
)
from ctrplan.schemas import (
    BodyDoc,
    BoxDoc,
    BoxUnionDoc,
    CircleDoc,
    GraspParams,
    HalfPlaneDoc,
    PairDoc,
    PlanarJointDoc,
    PlannerParams,
    RevoluteChainDoc,
    ScenarioDocument,
    SymmetryDoc,
    SystemDoc,
    TrustRegionParams,
    UnionMemberDoc,
)
from ctrplan.utils.exceptions import InvalidScenarioError, ScenarioNotFoundError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Symmetry:
    name: str
    matrix: np.ndarray
    offset: np.ndarray

    def apply(self, q: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(q, dtype=float) + self.offset

    def apply_input(self, u: np.ndarray, system: SystemModel) -> np.ndarray:
        """Robot rows of the map, applied to a position command."""
        q = system.compose(np.zeros(system.n_qo), u)
        return self.apply(q)[system.robot_idx]


@dataclass(eq=False)
class Scenario:
    document: ScenarioDocument
    system: SystemModel
    q0: np.ndarray
    goal: Optional[np.ndarray]
    params: PlannerParams
    grasp: GraspParams
    symmetries: List[Symmetry] = field(default_factory=list)
    stable_poses: List[np.ndarray] = field(default_factory=list)
    base_grasps: List[np.ndarray] = field(default_factory=list)

    @property
    def name(self) -> str:
        return self.document.name

    @property
    def content_hash(self) -> str:
        return self.document.content_hash()


# Conversion
def _geometry(doc):
    if isinstance(doc, CircleDoc):
        return Circle(doc.radius)
    if isinstance(doc, BoxDoc):
        return Box(tuple(doc.half_extents))
    if isinstance(doc, HalfPlaneDoc):
        return HalfPlane(tuple(doc.normal), doc.offset)
    return BoxUnion(
        tuple(UnionMember(Box(tuple(m.half_extents)), tuple(m.pose)) for m in doc.members)
    )


def _joint(doc):
    if isinstance(doc, RevoluteChainDoc):
        return RevoluteChain(tuple(doc.base), tuple(doc.link_lengths), tuple(doc.joint_indices))
    return PlanarJoint(tuple(doc.indices), tuple(doc.fixed))


def build_system(name: str, doc: SystemDoc) -> SystemModel:
    bodies = tuple(
        Body(name=b.name, role=b.role, geometry=_geometry(b.geometry), joint=_joint(b.joint))
        for b in doc.bodies
    )
    index = {body.name: i for i, body in enumerate(bodies)}
    pairs = tuple(ContactPair(index[p.body_a], index[p.body_b], p.mu) for p in doc.pairs)
    n_q = len(doc.object_indices) + len(doc.robot_indices)
    for body in bodies:
        if any(i >= n_q or i < 0 for i in body.dof_indices):
            raise InvalidScenarioError(f"body '{body.name}' references a DOF outside 0..{n_q - 1}")
    return SystemModel(
        name=name,
        bodies=bodies,
        pairs=pairs,
        object_indices=tuple(doc.object_indices),
        robot_indices=tuple(doc.robot_indices),
        stiffness=np.asarray(doc.stiffness, dtype=float),
        object_mass=np.asarray(doc.object_mass, dtype=float),
        epsilon=doc.epsilon,
        h=doc.h,
        tau_object=None if doc.tau_object is None else np.asarray(doc.tau_object),
        tau_robot=None if doc.tau_robot is None else np.asarray(doc.tau_robot),
        phi_threshold=doc.phi_threshold,
        object_dof_kinds=tuple(doc.object_dof_kinds),
        joint_lower=doc.joint_lower,
        joint_upper=doc.joint_upper,
        torque_lower=doc.torque_lower,
        torque_upper=doc.torque_upper,
    )


def from_document(document: ScenarioDocument) -> Scenario:
    system = build_system(document.name, document.system)
    q0 = np.asarray(document.q0, dtype=float)
    if q0.shape != (system.n_q,):
        raise InvalidScenarioError(f"q0 needs {system.n_q} entries, got {q0.size}")
    goal = None if document.goal is None else np.asarray(document.goal, dtype=float)
    if goal is not None and goal.shape != (system.n_qo,):
        raise InvalidScenarioError(f"goal needs {system.n_qo} entries, got {goal.size}")
    params = document.planner
    if len(params.goal_weights) != system.n_qo or len(params.action_weights) != system.n_qa:
        raise InvalidScenarioError("planner weights must match the object and robot DOF counts")
    symmetries = []
    for sym in document.symmetries:
        matrix = np.asarray(sym.matrix, dtype=float)
        offset = np.asarray(sym.offset, dtype=float)
        if matrix.shape != (system.n_q, system.n_q) or offset.shape != (system.n_q,):
            raise InvalidScenarioError(f"symmetry '{sym.name}' has the wrong shape")
        symmetries.append(Symmetry(sym.name, matrix, offset))
    return Scenario(
        document=document,
        system=system,
        q0=q0,
        goal=goal,
        params=params,
        grasp=document.grasp,
        symmetries=symmetries,
        stable_poses=[np.asarray(p, dtype=float) for p in document.stable_poses],
        base_grasps=[np.asarray(g, dtype=float) for g in document.base_grasps],
    )


# Kinematic helpers
def two_link_ik(
    base: Tuple[float, float], l1: float, l2: float, target: Tuple[float, float], elbow: int = 1
) -> Tuple[float, float]:
    """Relative joint angles placing the end of a two-link chain at target."""
    dx, dy = target[0] - base[0], target[1] - base[1]
    d2 = dx * dx + dy * dy
    cos2 = (d2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)
    if abs(cos2) > 1.0:
        raise InvalidScenarioError(f"target {target} is out of reach of the chain at {base}")
    theta2 = elbow * math.acos(cos2)
    theta1 = math.atan2(dy, dx) - math.atan2(l2 * math.sin(theta2), l1 + l2 * math.cos(theta2))
    return theta1, theta2


def _rotation_symmetry(
    name: str, angle: float, rotation_index: int, point_blocks: List[int], n_q: int
):
    c, s = math.cos(angle), math.sin(angle)
    matrix = np.eye(n_q)
    for i in point_blocks:
        matrix[i : i + 2, i : i + 2] = [[c, -s], [s, c]]
    offset = np.zeros(n_q)
    offset[rotation_index] = angle
    return SymmetryDoc(name=name, matrix=matrix.tolist(), offset=offset.tolist())


# Built-ins
def _pusher1d() -> ScenarioDocument:
    return ScenarioDocument(
        name="pusher1d",
        description="Frictionless ball pushing a box along a line.",
        system=SystemDoc(
            bodies=[
                BodyDoc(name="box", role="object", geometry=BoxDoc(half_extents=[0.1, 0.1]),
                        joint=PlanarJointDoc(indices=[0, None, None])),
                BodyDoc(name="ball", role="robot", geometry=CircleDoc(radius=0.1),
                        joint=PlanarJointDoc(indices=[1, None, None])),
            ],
            pairs=[PairDoc(body_a="box", body_b="ball", mu=0.0)],
            object_indices=[0],
            robot_indices=[1],
            stiffness=[100.0],
            object_mass=[[0.01]],
            phi_threshold=0.2,
            joint_lower=[-1.0],
            joint_upper=[1.0],
        ),
        q0=[0.2, -0.02],
        goal=[0.22],
        planner=PlannerParams(
            horizon=1,
            max_iterations=2,
            rollout_horizon=10,
            goal_weights=[1.0],
            action_weights=[1e-3],
            input_bound=0.1,
            trust_region=TrustRegionParams(variant="ra-ctr", radius=0.05, kappa=1e4),
        ),
    )


def _squeeze1d() -> ScenarioDocument:
    return ScenarioDocument(
        name="squeeze1d",
        description="Box squeezed between two frictionless balls.",
        system=SystemDoc(
            bodies=[
                BodyDoc(name="box", role="object", geometry=BoxDoc(half_extents=[0.1, 0.1]),
                        joint=PlanarJointDoc(indices=[0, None, None])),
                BodyDoc(name="left", role="robot", geometry=CircleDoc(radius=0.1),
                        joint=PlanarJointDoc(indices=[1, None, None])),
                BodyDoc(name="right", role="robot", geometry=CircleDoc(radius=0.1),
                        joint=PlanarJointDoc(indices=[2, None, None])),
            ],
            pairs=[
                PairDoc(body_a="box", body_b="left", mu=0.0),
                PairDoc(body_a="box", body_b="right", mu=0.0),
            ],
            object_indices=[0],
            robot_indices=[1, 2],
            stiffness=[100.0, 100.0],
            object_mass=[[0.01]],
            phi_threshold=0.2,
        ),
        q0=[0.0, -0.2, 0.2],
        goal=[0.0],
        planner=PlannerParams(
            goal_weights=[1.0],
            action_weights=[1e-3, 1e-3],
            input_bound=0.1,
            trust_region=TrustRegionParams(variant="ra-ctr", radius=0.05, kappa=100.0),
        ),
    )


def _boxball2d() -> ScenarioDocument:
    return ScenarioDocument(
        name="boxball2d",
        description="Ball pressing on the top face of a box that slides along x.",
        system=SystemDoc(
            bodies=[
                BodyDoc(name="box", role="object", geometry=BoxDoc(half_extents=[0.3, 0.1]),
                        joint=PlanarJointDoc(indices=[0, None, None], fixed=[0.0, -0.2, 0.0])),
                BodyDoc(name="ball", role="robot", geometry=CircleDoc(radius=0.1),
                        joint=PlanarJointDoc(indices=[1, 2, None])),
            ],
            pairs=[PairDoc(body_a="ball", body_b="box", mu=0.5)],
            object_indices=[0],
            robot_indices=[1, 2],
            stiffness=[100.0, 100.0],
            object_mass=[[0.1]],
            phi_threshold=0.2,
        ),
        q0=[0.0, 0.0, 0.03],
        goal=[0.2],
        planner=PlannerParams(
            horizon=1,
            max_iterations=2,
            goal_weights=[1.0],
            action_weights=[1e-3, 1e-3],
            input_bound=0.1,
            trust_region=TrustRegionParams(variant="ra-ctr", radius=0.05, kappa=1e3),
        ),
    )


_HAND_BASES = ((-0.1, -0.08), (0.1, -0.08))
_HAND_LINKS = (0.08, 0.06)


def _hand_configuration(
    left_tip: Tuple[float, float], right_tip: Tuple[float, float]
) -> List[float]:
    left = two_link_ik(_HAND_BASES[0], *_HAND_LINKS, left_tip, elbow=-1)
    right = two_link_ik(_HAND_BASES[1], *_HAND_LINKS, right_tip, elbow=1)
    return [0.0, 0.0, *left, *right]


def _planarhand() -> ScenarioDocument:
    antipodal = _hand_configuration((-0.06, 0.0), (0.06, 0.0))
    single_sided = _hand_configuration((-0.06, 0.0), (0.14, 0.0))
    fingers = []
    for side, base, joints in (("left", _HAND_BASES[0], [2, 3]), ("right", _HAND_BASES[1], [4, 5])):
        fingers.append(
            BodyDoc(
                name=f"{side}_tip",
                role="robot",
                geometry=CircleDoc(radius=0.01),
                joint=RevoluteChainDoc(
                    base=[*base, 0.0], link_lengths=list(_HAND_LINKS), joint_indices=joints
                ),
            )
        )
    return ScenarioDocument(
        name="planarhand",
        description="Disk held by two planar two-link fingers.",
        system=SystemDoc(
            bodies=[
                BodyDoc(name="disk", role="object", geometry=CircleDoc(radius=0.05),
                        joint=PlanarJointDoc(indices=[0, 1, None])),
                *fingers,
            ],
            pairs=[
                PairDoc(body_a="disk", body_b="left_tip", mu=0.5),
                PairDoc(body_a="disk", body_b="right_tip", mu=0.5),
                PairDoc(body_a="left_tip", body_b="right_tip", mu=0.0),
            ],
            object_indices=[0, 1],
            robot_indices=[2, 3, 4, 5],
            stiffness=[10.0, 10.0, 10.0, 10.0],
            object_mass=[[0.05, 0.0], [0.0, 0.05]],
            phi_threshold=0.1,
            joint_lower=[-math.pi] * 4,
            joint_upper=[math.pi] * 4,
        ),
        q0=antipodal,
        goal=[0.0, 0.02],
        planner=PlannerParams(
            horizon=1,
            max_iterations=3,
            rollout_horizon=10,
            goal_weights=[1.0, 1.0],
            action_weights=[1e-3] * 4,
            input_bound=0.1,
            trust_region=TrustRegionParams(variant="ra-ctr", radius=0.1, kappa=100.0),
        ),
        grasp=GraspParams(alpha=1.0, samples=100, hull_samples=1000),
        base_grasps=[antipodal, single_sided],
    )


def _pushert() -> ScenarioDocument:
    return ScenarioDocument(
        name="pushert",
        description="Circular pusher moving a T-shaped block on a table.",
        system=SystemDoc(
            bodies=[
                BodyDoc(
                    name="tee",
                    role="object",
                    geometry=BoxUnionDoc(
                        members=[
                            UnionMemberDoc(half_extents=[0.1, 0.025], pose=[0.0, 0.05, 0.0]),
                            UnionMemberDoc(half_extents=[0.025, 0.075], pose=[0.0, -0.05, 0.0]),
                        ]
                    ),
                    joint=PlanarJointDoc(indices=[0, 1, 2]),
                ),
                BodyDoc(name="pusher", role="robot", geometry=CircleDoc(radius=0.02),
                        joint=PlanarJointDoc(indices=[3, 4, None])),
            ],
            pairs=[PairDoc(body_a="tee", body_b="pusher", mu=0.5)],
            object_indices=[0, 1, 2],
            robot_indices=[3, 4],
            object_dof_kinds=["translation", "translation", "rotation"],
            stiffness=[100.0, 100.0],
            object_mass=[[0.1, 0.0, 0.0], [0.0, 0.1, 0.0], [0.0, 0.0, 5.4e-4]],
            phi_threshold=0.2,
            joint_lower=[-0.4, -0.4],
            joint_upper=[0.4, 0.4],
        ),
        q0=[0.0, 0.0, 0.0, 0.0, -0.146],
        goal=[0.0, 0.02, 0.0],
        planner=PlannerParams(
            horizon=2,
            max_iterations=3,
            rollout_horizon=10,
            goal_weights=[5.0, 5.0, 0.5],
            action_weights=[1e-2, 1e-2],
            input_bound=0.02,
            trust_region=TrustRegionParams(variant="r-ctr", radius=0.02, kappa=100.0),
        ),
        grasp=GraspParams(alpha=0.0, samples=100, hull_samples=1000),
    )


_SQUARE_HALF = 0.05
_FINGER_RADIUS = 0.01


def _palmsquare() -> ScenarioDocument:
    face = _SQUARE_HALF + _FINGER_RADIUS
    counter_clockwise = [0.0, face, 0.03, -face, -0.03]
    clockwise = [0.0, face, -0.03, -face, 0.03]
    symmetries = [
        _rotation_symmetry(f"rot{k * 90}", k * math.pi / 2.0, 0, [1, 3], 5) for k in range(1, 4)
    ]
    fingers = [
        BodyDoc(name=name, role="robot", geometry=CircleDoc(radius=_FINGER_RADIUS),
                joint=PlanarJointDoc(indices=indices))
        for name, indices in (("finger1", [1, 2, None]), ("finger2", [3, 4, None]))
    ]
    return ScenarioDocument(
        name="palmsquare",
        description="Square pinned at its center, turned by two point fingers.",
        system=SystemDoc(
            bodies=[
                BodyDoc(
                    name="square",
                    role="object",
                    geometry=BoxDoc(half_extents=[_SQUARE_HALF] * 2),
                    joint=PlanarJointDoc(indices=[None, None, 0]),
                ),
                *fingers,
            ],
            pairs=[
                PairDoc(body_a="square", body_b="finger1", mu=0.5),
                PairDoc(body_a="square", body_b="finger2", mu=0.5),
                PairDoc(body_a="finger1", body_b="finger2", mu=0.0),
            ],
            object_indices=[0],
            robot_indices=[1, 2, 3, 4],
            object_dof_kinds=["rotation"],
            stiffness=[100.0] * 4,
            object_mass=[[1.67e-3]],
            phi_threshold=0.1,
            joint_lower=[-0.15] * 4,
            joint_upper=[0.15] * 4,
        ),
        q0=counter_clockwise,
        goal=[math.pi / 2.0],
        planner=PlannerParams(
            horizon=1,
            max_iterations=2,
            rollout_horizon=30,
            goal_weights=[1.0],
            action_weights=[1e-3] * 4,
            input_bound=0.02,
            trust_region=TrustRegionParams(variant="r-ctr", radius=0.02, kappa=100.0),
        ),
        symmetries=symmetries,
        stable_poses=[[k * math.pi / 2.0] for k in range(4)],
        base_grasps=[counter_clockwise, clockwise],
    )


BUILTIN_SCENARIOS: Dict[str, Callable[[], ScenarioDocument]] = {
    "pusher1d": _pusher1d,
    "squeeze1d": _squeeze1d,
    "boxball2d": _boxball2d,
    "planarhand": _planarhand,
    "pushert": _pushert,
    "palmsquare": _palmsquare,
}


def list_scenarios() -> List[str]:
    return sorted(BUILTIN_SCENARIOS)


def _search_paths() -> List[Path]:
    return [Path(p) for p in settings.scenario_paths_list]


def parse_document(text: str, source: str = "<string>") -> ScenarioDocument:
    try:
        return ScenarioDocument.model_validate_json(text)
    except ValidationError as exc:
        raise InvalidScenarioError(f"{source}: {exc}") from exc


def save_document(document: ScenarioDocument, path: os.PathLike) -> None:
    text = json.dumps(document.model_dump(mode="json"), indent=2, sort_keys=True)
    Path(path).write_text(text + "\n")


def load_document(name_or_path: str) -> ScenarioDocument:
    """Resolve a built-in name, a JSON file path, or <name>.json on SCENARIO_PATHS."""
    path = Path(name_or_path)
    if path.suffix == ".json" and path.is_file():
        return parse_document(path.read_text(), str(path))
    if name_or_path in BUILTIN_SCENARIOS:
        return BUILTIN_SCENARIOS[name_or_path]()
    for directory in _search_paths():
        candidate = directory / f"{name_or_path}.json"
        if candidate.is_file():
            return parse_document(candidate.read_text(), str(candidate))
    known = list_scenarios() + [
        p.stem for d in _search_paths() if d.is_dir() for p in d.glob("*.json")
    ]
    raise ScenarioNotFoundError(name_or_path, difflib.get_close_matches(name_or_path, known, n=3))


def load_scenario(name_or_path: str) -> Scenario:
    document = load_document(name_or_path)
    logger.debug(f"Loaded scenario '{document.name}' ({document.content_hash()[:12]})")
    return from_document(document)
