import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ctrplan.config import settings
from ctrplan.conic_solver import (
    ConeConstraint,
    ConicProgram,
    SolverStatus,
    hull_and_radius,
    solve_socp,
)
from ctrplan.geometry import (
    body_pose,
    contact_kinematics,
    detect_contacts,
    pair_distance,
    point_jacobian,
)
from ctrplan.models import BodyRole, SystemModel, Trajectory
from ctrplan.schemas import PlannerParams
from ctrplan.sensitivity import linearize
from ctrplan.services.planner_service import planner_service, trajectory_cost
from ctrplan.trust_region import (
    TrustRegionSpec,
    TrustRegionVariant,
    build,
    sample,
    wrench_set_samples,
)
from ctrplan.utils.exceptions import DegenerateRegionError, NoFeasibleGraspError
from ctrplan.utils.rng import make_rng

logger = logging.getLogger(__name__)

_STALL_WINDOW = 10
_STALL_DECREASE = 1e-8


@dataclass(eq=False)
class ValueResult:
    value: float
    infeasible: bool
    trajectory: Trajectory


@dataclass(eq=False)
class GraspCandidate:
    q_robot: np.ndarray
    value: float
    radius: float
    alpha: float
    sample_index: int
    within_limits: bool = True
    penetration_free: bool = True
    infeasible_rollout: bool = False

    @property
    def feasible(self) -> bool:
        return self.within_limits and self.penetration_free

    @property
    def cost(self) -> float:
        return self.value - self.alpha * self.radius**2


@dataclass(eq=False)
class GraspSearch:
    best: GraspCandidate
    candidates: List[GraspCandidate] = field(default_factory=list)

    @property
    def feasible_count(self) -> int:
        return sum(1 for c in self.candidates if c.feasible)


@dataclass(eq=False)
class IkResult:
    q_robot: np.ndarray
    residual: float
    iterations: int
    converged: bool
    stalled: bool = False


@dataclass(eq=False)
class LandscapePoint:
    q_robot: np.ndarray
    value: float
    penetrating: bool
    infeasible: bool


def within_joint_limits(system: SystemModel, q_robot: np.ndarray, tol: float = 1e-9) -> bool:
    if system.joint_lower is not None and np.any(q_robot < system.joint_lower - tol):
        return False
    if system.joint_upper is not None and np.any(q_robot > system.joint_upper + tol):
        return False
    return True


def penetration_free(system: SystemModel, q: np.ndarray) -> bool:
    return all(
        pair_distance(system, q, i).phi >= -settings.COLLISION_TOL for i in range(len(system.pairs))
    )


def body_center(system: SystemModel, q: np.ndarray, body_index: int) -> np.ndarray:
    x, y, _ = body_pose(system.bodies[body_index], q)
    return np.array([x, y])


def surface_targets(system: SystemModel, q: np.ndarray) -> Dict[int, np.ndarray]:
    """Robot body centers moved onto the surface of the object they are closest to."""
    targets: Dict[int, np.ndarray] = {}
    gaps: Dict[int, float] = {}
    for i, pair in enumerate(system.pairs):
        if not system.is_robot_object_pair(pair):
            continue
        sd = pair_distance(system, q, i)
        robot_is_b = system.bodies[pair.body_b].role == BodyRole.ROBOT
        body = pair.body_b if robot_is_b else pair.body_a
        if body in gaps and gaps[body] <= sd.phi:
            continue
        # normal points from B to A
        shift = sd.phi * sd.normal if robot_is_b else -sd.phi * sd.normal
        targets[body] = body_center(system, q, body) + shift
        gaps[body] = sd.phi
    return targets


class GraspService:
    @staticmethod
    def value_function(
        system: SystemModel,
        q_robot: np.ndarray,
        q_object: np.ndarray,
        goal: np.ndarray,
        params: PlannerParams,
    ) -> ValueResult:
        """Cost of the MPC rollout from (q_object, q_robot) towards the object goal."""
        params = params.model_copy(update={"robot_goal_weights": None})
        q0 = system.compose(np.asarray(q_object, float), np.asarray(q_robot, float))
        mpc = planner_service.mpc_rollout(
            system, q0, goal, params, project_every_step=params.project_every_step
        )
        if mpc.infeasible:
            return ValueResult(value=np.inf, infeasible=True, trajectory=mpc.trajectory)
        return ValueResult(
            value=trajectory_cost(system, mpc.trajectory, goal, params),
            infeasible=False,
            trajectory=mpc.trajectory,
        )

    @staticmethod
    def robustness_radius(
        system: SystemModel,
        q_robot: np.ndarray,
        q_object: np.ndarray,
        spec: TrustRegionSpec,
        samples: int,
        seed: int,
    ) -> float:
        """Radius of the largest origin-centred ball inside the sampled wrench set."""
        q_robot = np.asarray(q_robot, dtype=float)
        q = system.compose(np.asarray(q_object, float), q_robot)
        if not detect_contacts(system, q):
            return 0.0
        if not (spec.variant.action_only and spec.variant.dual):
            spec = TrustRegionSpec(
                variant=TrustRegionVariant.RA_CTR, radius=spec.radius, kappa=spec.kappa
            )
        lin = linearize(system, q, q_robot, spec.kappa, with_configuration=False)
        if not lin.contacts:
            return 0.0
        try:
            drawn = sample(build(spec, lin), samples, seed)
        except DegenerateRegionError as exc:
            logger.warning(f"Wrench set sampling failed: {exc.detail}")
            return 0.0
        wrenches = wrench_set_samples(lin, drawn.samples).total
        hull = hull_and_radius(wrenches)
        return 0.0 if hull.degenerate else hull.radius

    @staticmethod
    def score(
        system: SystemModel,
        q_robot: np.ndarray,
        q_object: np.ndarray,
        goal: np.ndarray,
        params: PlannerParams,
        alpha: float,
        hull_samples: int,
        seed: int,
        sample_index: int = 0,
    ) -> GraspCandidate:
        """Feasibility record, value and robustness of one robot configuration."""
        q_robot = np.asarray(q_robot, dtype=float)
        q = system.compose(np.asarray(q_object, float), q_robot)
        candidate = GraspCandidate(
            q_robot=q_robot,
            value=np.inf,
            radius=0.0,
            alpha=alpha,
            sample_index=sample_index,
            within_limits=within_joint_limits(system, q_robot),
            penetration_free=penetration_free(system, q),
        )
        if not candidate.feasible:
            return candidate
        value = GraspService.value_function(system, q_robot, q_object, goal, params)
        candidate.value = value.value
        candidate.infeasible_rollout = value.infeasible
        tr = params.trust_region
        spec = TrustRegionSpec(variant=TrustRegionVariant.RA_CTR, radius=tr.radius, kappa=tr.kappa)
        candidate.radius = GraspService.robustness_radius(
            system, q_robot, q_object, spec, hull_samples, seed
        )
        return candidate

    @staticmethod
    def ik_project(
        system: SystemModel,
        q_object: np.ndarray,
        q_robot: np.ndarray,
        targets: Dict[int, np.ndarray],
    ) -> IkResult:
        """Move robot body centres to target points by a sequence of small collision-aware QPs."""
        q_object = np.asarray(q_object, dtype=float)
        q_robot = np.asarray(q_robot, dtype=float).copy()
        n_u = system.n_qa
        robot_pairs = [i for i, pair in enumerate(system.pairs) if system.involves_robot(pair)]
        step_bound = settings.IK_STEP_BOUND

        def residual_of(qa: np.ndarray) -> float:
            q = system.compose(q_object, qa)
            return float(
                np.sqrt(
                    sum(np.sum((body_center(system, q, b) - t) ** 2) for b, t in targets.items())
                )
            )

        best, best_residual = q_robot.copy(), residual_of(q_robot)
        history = [best_residual]
        for iteration in range(settings.IK_MAX_ITERATIONS):
            if best_residual < settings.IK_TOL:
                return IkResult(best, best_residual, iteration, converged=True)
            q = system.compose(q_object, q_robot)

            # Fingertip linearization
            P = 2.0 * settings.CHOLESKY_REGULARIZATION * np.eye(n_u)
            b = np.zeros(n_u)
            for body, target in targets.items():
                center = body_center(system, q, body)
                J = point_jacobian(system.bodies[body], q, center, system.n_q)[:, system.robot_idx]
                P += 2.0 * J.T @ J
                b += 2.0 * J.T @ (center - target)

            cones: List[ConeConstraint] = []
            for i in range(n_u):
                e = np.eye(n_u)[i : i + 1]
                cones.append(ConeConstraint(A=e, c=[step_bound], label=f"step+{i}"))
                cones.append(ConeConstraint(A=-e, c=[step_bound], label=f"step-{i}"))
                if system.joint_lower is not None:
                    room = q_robot[i] - system.joint_lower[i] + 1e-9
                    cones.append(ConeConstraint(A=e, c=[room], label=f"lower{i}"))
                if system.joint_upper is not None:
                    room = system.joint_upper[i] - q_robot[i] + 1e-9
                    cones.append(ConeConstraint(A=-e, c=[room], label=f"upper{i}"))
            # Non-penetration, never deeper than now
            near = [
                i for i in robot_pairs if pair_distance(system, q, i).phi < system.phi_threshold
            ]
            for k in contact_kinematics(system, q, near):
                floor = min(k.phi, 0.0) - settings.COLLISION_TOL
                cones.append(
                    ConeConstraint(
                        A=k.J_a(system)[:1], c=[k.phi - floor], label=f"pair{k.pair_index}"
                    )
                )

            solution = solve_socp(ConicProgram(P=P, b=b, cones=cones))
            if solution.status in (SolverStatus.INFEASIBLE, SolverStatus.NUMERICAL_FAILURE):
                logger.warning(f"IK step {iteration} failed with status {solution.status.value}")
                return IkResult(best, best_residual, iteration, converged=False, stalled=True)
            q_robot = q_robot + solution.x
            residual = residual_of(q_robot)
            clear = penetration_free(system, system.compose(q_object, q_robot))
            if residual < best_residual and clear:
                best, best_residual = q_robot.copy(), residual
            history.append(best_residual)
            window_full = len(history) > _STALL_WINDOW
            if window_full and history[-_STALL_WINDOW - 1] - best_residual < _STALL_DECREASE:
                logger.warning(
                    f"IK stalled at residual {best_residual:.2e} after {iteration + 1} iterations"
                )
                return IkResult(best, best_residual, iteration + 1, converged=False, stalled=True)

        converged = best_residual < settings.IK_TOL
        return IkResult(
            best,
            best_residual,
            settings.IK_MAX_ITERATIONS,
            converged=converged,
            stalled=not converged,
        )

    @staticmethod
    def sample_grasps(
        system: SystemModel,
        q_object: np.ndarray,
        goal: np.ndarray,
        n: int,
        alpha: float,
        seed: int,
        params: PlannerParams,
        hull_samples: Optional[int] = None,
    ) -> GraspSearch:
        """Sample, project, filter and score robot configurations; keep the lowest total cost."""
        if n < 1:
            raise ValueError("n must be at least 1")
        if system.joint_lower is None or system.joint_upper is None:
            raise ValueError(f"scenario '{system.name}' declares no joint limits to sample from")
        q_object = np.asarray(q_object, dtype=float)
        hull_samples = hull_samples or settings.HULL_SAMPLES
        candidates: List[GraspCandidate] = []
        best: Optional[GraspCandidate] = None
        for i in range(n):
            rng = make_rng(seed, i)
            q_robot = rng.uniform(system.joint_lower, system.joint_upper)
            targets = surface_targets(system, system.compose(q_object, q_robot))
            projected = GraspService.ik_project(system, q_object, q_robot, targets)
            candidate = GraspService.score(
                system,
                projected.q_robot,
                q_object,
                goal,
                params,
                alpha,
                hull_samples,
                seed,
                sample_index=i,
            )
            candidates.append(candidate)
            usable = candidate.feasible and np.isfinite(candidate.cost)
            if usable and (best is None or candidate.cost < best.cost):
                best = candidate
            logger.debug(
                f"Grasp sample {i}: feasible={candidate.feasible}, "
                f"V={candidate.value:.3e}, r={candidate.radius:.3e}"
            )
        if best is None:
            # Infinite-value candidates are still feasible placements
            feasible = [c for c in candidates if c.feasible]
            if not feasible:
                raise NoFeasibleGraspError(n)
            best = feasible[0]
        logger.info(f"Best grasp: sample {best.sample_index}, cost {best.cost:.4e}")
        return GraspSearch(best=best, candidates=candidates)

    @staticmethod
    def value_landscape(
        system: SystemModel,
        q_object: np.ndarray,
        goal: np.ndarray,
        grid: Sequence[np.ndarray],
        params: PlannerParams,
    ) -> List[LandscapePoint]:
        """V over a grid of robot placements; penetrating placements are skipped."""
        points = []
        for q_robot in grid:
            q_robot = np.asarray(q_robot, dtype=float)
            if not penetration_free(system, system.compose(np.asarray(q_object, float), q_robot)):
                points.append(LandscapePoint(q_robot, np.nan, penetrating=True, infeasible=False))
                continue
            result = GraspService.value_function(system, q_robot, q_object, goal, params)
            points.append(
                LandscapePoint(
                    q_robot, result.value, penetrating=False, infeasible=result.infeasible
                )
            )
        return points


grasp_service = GraspService()
