import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from ctrplan import __version__
from ctrplan.config import settings
from ctrplan.cqdc import rollout
from ctrplan.geometry import pair_distance
from ctrplan.models import SystemModel, Trajectory
from ctrplan.scenarios import Scenario, Symmetry
from ctrplan.schemas import EdgeDoc, PlannerParams, RoadmapDocument
from ctrplan.services.planner_service import planner_service
from ctrplan.utils.exceptions import InvalidScenarioError, RoadmapDisconnectedError
from ctrplan.utils.rng import make_rng

logger = logging.getLogger(__name__)

_VERTEX_MATCH_TOL = 1e-9
_RRT_STREAM = 7


@dataclass(eq=False)
class Edge:
    source: int
    target: int
    configurations: List[np.ndarray]
    inputs: List[np.ndarray]
    symmetry: Optional[str] = None

    @property
    def length(self) -> float:
        steps = np.diff(np.asarray(self.configurations), axis=0)
        return float(np.linalg.norm(steps, axis=1).sum()) if len(steps) else 0.0


@dataclass(eq=False)
class Roadmap:
    system: SystemModel
    vertices: List[np.ndarray]
    base_vertex_count: int
    graph: nx.DiGraph = field(default_factory=nx.DiGraph)
    scenario: str = ""
    scenario_hash: str = ""
    seed: int = 0

    def __post_init__(self) -> None:
        self.graph.add_nodes_from(range(len(self.vertices)))

    @property
    def edges(self) -> List[Edge]:
        ordered = sorted(self.graph.edges(data=True), key=lambda e: e[:2])
        return [data["edge"] for _, _, data in ordered]

    def add_edge(self, edge: Edge) -> None:
        self.graph.add_edge(edge.source, edge.target, length=edge.length, edge=edge)

    def edge(self, source: int, target: int) -> Edge:
        return self.graph.edges[source, target]["edge"]

    def is_strongly_connected(self) -> bool:
        return len(self.vertices) > 0 and nx.is_strongly_connected(self.graph)


@dataclass(eq=False)
class QueryResult:
    vertex_path: List[int]
    trajectory: Trajectory
    length: float


@dataclass(eq=False)
class WalkStep:
    source: int
    target: int
    translation_error: float
    rotation_error: float
    success: bool


@dataclass(eq=False)
class WalkResult:
    steps: List[WalkStep]

    @property
    def successes(self) -> int:
        return sum(1 for s in self.steps if s.success)

    @property
    def all_succeeded(self) -> bool:
        return all(s.success for s in self.steps)


def collision_free(system: SystemModel, q: np.ndarray) -> bool:
    """No robot-involving pair penetrates beyond the collision tolerance."""
    return all(
        pair_distance(system, q, i).phi >= -settings.COLLISION_TOL
        for i, pair in enumerate(system.pairs)
        if system.involves_robot(pair)
    )


def segment_free(system: SystemModel, q_object: np.ndarray, a: np.ndarray, b: np.ndarray) -> bool:
    """Straight robot-space segment checked at the collision resolution."""
    n = max(1, int(np.ceil(np.abs(b - a).max(initial=0.0) / settings.COLLISION_RESOLUTION)))
    for s in np.linspace(0.0, 1.0, n + 1)[1:]:
        if not collision_free(system, system.compose(q_object, a + s * (b - a))):
            return False
    return True


def densify(path: Sequence[np.ndarray], spacing: float) -> List[np.ndarray]:
    """Waypoints no further than `spacing` apart (infinity norm) along a polyline."""
    points = [np.asarray(path[0], dtype=float)]
    for a, b in zip(path[:-1], path[1:]):
        n = max(1, int(np.ceil(np.abs(b - a).max(initial=0.0) / spacing)))
        points.extend(a + (b - a) * s for s in np.linspace(0.0, 1.0, n + 1)[1:])
    return points


def object_close(
    system: SystemModel, q: np.ndarray, q_goal_object: np.ndarray
) -> Tuple[bool, float, float]:
    translation, rotation = system.object_pose_error(system.split(q)[0], q_goal_object)
    ok = translation <= settings.EDGE_TRANSLATION_TOL and rotation <= settings.EDGE_ROTATION_TOL
    return ok, translation, rotation


def object_metric(
    system: SystemModel, params: PlannerParams, a: np.ndarray, b: np.ndarray
) -> float:
    """Goal-weighted distance between two object configurations."""
    diff = system.object_difference(b, a)
    return float(np.sqrt(diff @ (np.asarray(params.goal_weights) * diff)))


class RoadmapService:
    @staticmethod
    def collision_free_connect(
        system: SystemModel, q_from: np.ndarray, q_to: np.ndarray, seed: int = 0
    ) -> Optional[List[np.ndarray]]:
        """Robot-space path between two configurations sharing an object pose, or None."""
        q_from, q_to = np.asarray(q_from, dtype=float), np.asarray(q_to, dtype=float)
        q_object, start = system.split(q_from)
        goal = system.split(q_to)[1]
        if np.allclose(start, goal, atol=0.0, rtol=0.0):
            return [q_from]
        if segment_free(system, q_object, start, goal):
            return [q_from, system.compose(q_object, goal)]

        # Goal-biased RRT in robot space, object held still
        rng = make_rng(seed, _RRT_STREAM)
        lower, upper = system.joint_lower, system.joint_upper
        if lower is None:
            lower = np.minimum(start, goal) - 0.2
        if upper is None:
            upper = np.maximum(start, goal) + 0.2
        nodes, parents = [start], [-1]
        for iteration in range(settings.RRT_MAX_ITERATIONS):
            target = goal if rng.random() < settings.RRT_GOAL_BIAS else rng.uniform(lower, upper)
            nearest = int(np.argmin(np.linalg.norm(np.asarray(nodes) - target, axis=1)))
            direction = target - nodes[nearest]
            distance = float(np.linalg.norm(direction))
            if distance == 0.0:
                continue
            new = nodes[nearest] + direction * min(1.0, settings.RRT_STEP / distance)
            if not segment_free(system, q_object, nodes[nearest], new):
                continue
            nodes.append(new)
            parents.append(nearest)
            near_goal = np.linalg.norm(new - goal) <= settings.RRT_STEP
            if near_goal and segment_free(system, q_object, new, goal):
                path = [goal]
                index = len(nodes) - 1
                while index >= 0:
                    path.append(nodes[index])
                    index = parents[index]
                logger.debug(
                    f"RRT connected after {iteration + 1} iterations with {len(nodes)} nodes"
                )
                return [system.compose(q_object, p) for p in reversed(path)]
        logger.info(f"RRT failed after {settings.RRT_MAX_ITERATIONS} iterations")
        return None

    @staticmethod
    def connect(
        system: SystemModel,
        q_from: np.ndarray,
        q_to: np.ndarray,
        params: PlannerParams,
        seed: int = 0,
    ) -> Optional[Tuple[List[np.ndarray], List[np.ndarray]]]:
        """MPC to the target object pose, then a collision-free robot move to the target grasp."""
        q_from, q_to = np.asarray(q_from, dtype=float), np.asarray(q_to, dtype=float)
        goal_object = system.split(q_to)[0]
        mpc = planner_service.mpc_rollout(
            system, q_from, goal_object, params, project_every_step=params.project_every_step
        )
        if mpc.infeasible:
            return None
        q_mid = mpc.final
        ok, translation, rotation = object_close(system, q_mid, goal_object)
        if not ok:
            logger.debug(f"MPC missed the target pose by {translation:.4f} m / {rotation:.4f} rad")
            return None
        if not collision_free(system, q_mid):
            return None
        path = RoadmapService.collision_free_connect(system, q_mid, q_to, seed)
        if path is None:
            return None

        # Execute the robot move on the dynamics so that stored edges replay exactly
        waypoints = densify([system.split(q)[1] for q in path], params.input_bound)[1:]
        move = rollout(system, q_mid, waypoints)
        end = move.final
        ok, _, _ = object_close(system, end, goal_object)
        robot_gap = np.abs(system.split(end)[1] - system.split(q_to)[1]).max(initial=0.0)
        if not ok or robot_gap > settings.EDGE_TRANSLATION_TOL:
            return None
        configurations = mpc.trajectory.configurations + move.configurations[1:]
        inputs = mpc.trajectory.inputs + move.inputs
        return configurations, inputs

    @staticmethod
    def _vertex_index(vertices: List[np.ndarray], q: np.ndarray) -> Optional[int]:
        for i, v in enumerate(vertices):
            if np.allclose(v, q, atol=_VERTEX_MATCH_TOL, rtol=0.0):
                return i
        return None

    @staticmethod
    def expand_vertices(
        base: Sequence[np.ndarray], symmetries: Sequence[Symmetry]
    ) -> List[np.ndarray]:
        vertices = [np.asarray(q, dtype=float) for q in base]
        for symmetry in symmetries:
            for q in base:
                image = symmetry.apply(q)
                if RoadmapService._vertex_index(vertices, image) is None:
                    vertices.append(image)
        return vertices

    @staticmethod
    def symmetry_expand(roadmap: Roadmap, symmetries: Sequence[Symmetry]) -> int:
        """Add the symmetric image of every edge whose endpoints map onto vertices.

        Returns the number of edges added.
        """
        system = roadmap.system
        added = 0
        for edge in list(roadmap.edges):
            for symmetry in symmetries:
                source = RoadmapService._vertex_index(
                    roadmap.vertices, symmetry.apply(roadmap.vertices[edge.source])
                )
                target = RoadmapService._vertex_index(
                    roadmap.vertices, symmetry.apply(roadmap.vertices[edge.target])
                )
                if source is None or target is None or source == target:
                    continue
                if roadmap.graph.has_edge(source, target):
                    continue
                roadmap.add_edge(
                    Edge(
                        source=source,
                        target=target,
                        configurations=[symmetry.apply(q) for q in edge.configurations],
                        inputs=[symmetry.apply_input(u, system) for u in edge.inputs],
                        symmetry=symmetry.name,
                    )
                )
                added += 1
        return added

    @staticmethod
    def build_roadmap(
        system: SystemModel,
        grasps: Sequence[np.ndarray],
        params: PlannerParams,
        symmetries: Sequence[Symmetry] = (),
        seed: int = 0,
    ) -> Roadmap:
        """Plan edges out of the base grasps, then copy them through the object symmetries."""
        if not grasps:
            raise InvalidScenarioError("roadmap construction needs at least one grasp")
        vertices = RoadmapService.expand_vertices(grasps, symmetries)
        roadmap = Roadmap(
            system=system, vertices=vertices, base_vertex_count=len(grasps), seed=seed
        )
        for i in range(len(grasps)):
            for j in range(len(vertices)):
                if i == j:
                    continue
                connection = RoadmapService.connect(system, vertices[i], vertices[j], params, seed)
                if connection is None:
                    logger.debug(f"No edge {i} -> {j}")
                    continue
                configurations, inputs = connection
                roadmap.add_edge(
                    Edge(source=i, target=j, configurations=configurations, inputs=inputs)
                )
                logger.info(f"Edge {i} -> {j} with {len(inputs)} steps")
        if symmetries:
            added = RoadmapService.symmetry_expand(roadmap, symmetries)
            logger.info(f"Symmetry expansion added {added} edges")
        logger.info(
            f"Roadmap with {len(roadmap.vertices)} vertices "
            f"and {roadmap.graph.number_of_edges()} edges"
        )
        return roadmap

    @staticmethod
    def replay_edge(
        system: SystemModel, edge: Edge, start: Optional[np.ndarray] = None
    ) -> np.ndarray:
        q0 = edge.configurations[0] if start is None else start
        return rollout(system, q0, edge.inputs).final

    @staticmethod
    def nearest_vertex(roadmap: Roadmap, q_object: np.ndarray, params: PlannerParams) -> int:
        distances = [
            object_metric(roadmap.system, params, roadmap.system.split(v)[0], q_object)
            for v in roadmap.vertices
        ]
        return int(np.argmin(distances))

    @staticmethod
    def query_roadmap(
        roadmap: Roadmap, q0: np.ndarray, goal: np.ndarray, params: PlannerParams
    ) -> QueryResult:
        """Shortest stored path between the vertices nearest the start and the goal.

        The start and goal are joined to those vertices by freshly planned segments.
        """
        if not roadmap.vertices:
            raise InvalidScenarioError("roadmap has no vertices")
        system = roadmap.system
        q0 = np.asarray(q0, dtype=float)
        goal = np.asarray(goal, dtype=float)
        source = RoadmapService.nearest_vertex(roadmap, system.split(q0)[0], params)
        target = RoadmapService.nearest_vertex(roadmap, goal, params)

        try:
            vertex_path = nx.dijkstra_path(roadmap.graph, source, target, weight="length")
        except nx.NetworkXNoPath:
            raise RoadmapDisconnectedError(
                source, target, nx.descendants(roadmap.graph, source) | {source}
            )

        trajectory = Trajectory(configurations=[q0])
        # Start segment
        if not np.allclose(q0, roadmap.vertices[source], atol=_VERTEX_MATCH_TOL, rtol=0.0):
            connection = RoadmapService.connect(
                system, q0, roadmap.vertices[source], params, roadmap.seed
            )
            if connection is None:
                raise RoadmapDisconnectedError(source, target, [])
            trajectory.configurations.extend(connection[0][1:])
            trajectory.inputs.extend(connection[1])
        # Stored edges
        for a, b in zip(vertex_path[:-1], vertex_path[1:]):
            edge = roadmap.edge(a, b)
            trajectory.configurations.extend(edge.configurations[1:])
            trajectory.inputs.extend(edge.inputs)
        # Goal segment
        ok, _, _ = object_close(system, trajectory.final, goal)
        if not ok:
            mpc = planner_service.mpc_rollout(
                system, trajectory.final, goal, params, project_every_step=params.project_every_step
            )
            trajectory.configurations.extend(mpc.trajectory.configurations[1:])
            trajectory.inputs.extend(mpc.trajectory.inputs)

        length = float(
            np.linalg.norm(np.diff(np.asarray(trajectory.configurations), axis=0), axis=1).sum()
        )
        logger.info(f"Roadmap query {source} -> {target}: {len(vertex_path) - 1} edges")
        return QueryResult(vertex_path=vertex_path, trajectory=trajectory, length=length)

    @staticmethod
    def random_walk(roadmap: Roadmap, n: int, seed: int, start: int = 0) -> WalkResult:
        """Replay n consecutive random edges open-loop, carrying the realized state forward."""
        system = roadmap.system
        rng = make_rng(seed, 0)
        vertex = start
        q = roadmap.vertices[vertex]
        steps: List[WalkStep] = []
        for _ in range(n):
            successors = sorted(roadmap.graph.successors(vertex))
            if not successors:
                logger.warning(f"Random walk stuck at vertex {vertex} with no outgoing edges")
                break
            target = successors[int(rng.integers(len(successors)))]
            edge = roadmap.edge(vertex, target)
            q = RoadmapService.replay_edge(system, edge, q)
            ok, translation, rotation = object_close(
                system, q, system.split(roadmap.vertices[target])[0]
            )
            steps.append(WalkStep(vertex, target, translation, rotation, ok))
            if not ok:
                logger.warning(
                    f"Edge {vertex} -> {target} missed by {translation:.4f} m / {rotation:.4f} rad"
                )
                q = roadmap.vertices[target]
            vertex = target
        return WalkResult(steps=steps)

    # Persistence
    @staticmethod
    def to_document(roadmap: Roadmap) -> RoadmapDocument:
        return RoadmapDocument(
            scenario=roadmap.scenario,
            scenario_hash=roadmap.scenario_hash,
            seed=roadmap.seed,
            tool_version=__version__,
            vertices=[v.tolist() for v in roadmap.vertices],
            base_vertex_count=roadmap.base_vertex_count,
            edges=[
                EdgeDoc(
                    source=e.source,
                    target=e.target,
                    length=e.length,
                    configurations=[q.tolist() for q in e.configurations],
                    inputs=[u.tolist() for u in e.inputs],
                    symmetry=e.symmetry,
                )
                for e in roadmap.edges
            ],
        )

    @staticmethod
    def from_document(document: RoadmapDocument, scenario: Scenario) -> Roadmap:
        if document.scenario_hash and document.scenario_hash != scenario.content_hash:
            raise InvalidScenarioError(
                f"roadmap was built for scenario hash {document.scenario_hash[:12]}, "
                f"not {scenario.content_hash[:12]}"
            )
        roadmap = Roadmap(
            system=scenario.system,
            vertices=[np.asarray(v, dtype=float) for v in document.vertices],
            base_vertex_count=document.base_vertex_count,
            scenario=document.scenario,
            scenario_hash=document.scenario_hash,
            seed=document.seed,
        )
        for e in document.edges:
            roadmap.add_edge(
                Edge(
                    source=e.source,
                    target=e.target,
                    configurations=[np.asarray(q, dtype=float) for q in e.configurations],
                    inputs=[np.asarray(u, dtype=float) for u in e.inputs],
                    symmetry=e.symmetry,
                )
            )
        return roadmap

    @staticmethod
    def save(roadmap: Roadmap, path: Path) -> None:
        Path(path).write_text(RoadmapService.to_document(roadmap).model_dump_json(indent=2) + "\n")

    @staticmethod
    def load(path: Path, scenario: Scenario) -> Roadmap:
        document = RoadmapDocument.model_validate_json(Path(path).read_text())
        return RoadmapService.from_document(document, scenario)


roadmap_service = RoadmapService()
