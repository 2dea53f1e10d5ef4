import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import lstsq

from ctrplan.config import settings
from ctrplan.conic_solver import (
    ConeConstraint,
    ConicProgram,
    SolverStatus,
    solve_socp,
)
from ctrplan.cqdc import rollout, step_nonsmooth
from ctrplan.geometry import contact_kinematics, pair_distance
from ctrplan.models import SystemModel, Trajectory
from ctrplan.schemas import PlannerParams
from ctrplan.sensitivity import LinearizedDynamics, linearize
from ctrplan.softsim import QuasidynamicPlant, SoftPlant, SoftPlantState
from ctrplan.trust_region import (
    TrustRegionSpec,
    TrustRegionVariant,
    build,
    motion_set_samples,
    sample,
)
from ctrplan.utils.exceptions import (
    DegenerateHullError,
    NumericalFailureError,
    SolverInfeasibleError,
)
from ctrplan.utils.rng import make_rng

logger = logging.getLogger(__name__)

Plant = Union[SoftPlant, QuasidynamicPlant]


# Results
@dataclass(eq=False)
class SubTrajOptResult:
    du: np.ndarray  # (T, n_qa)
    dq: np.ndarray  # (T + 1, n_q), dq[0] = 0
    objective: float
    status: SolverStatus
    linearizations: List[LinearizedDynamics] = field(default_factory=list, repr=False)


@dataclass(eq=False)
class PlanResult:
    inputs: np.ndarray  # (T, n_qa)
    trajectory: Trajectory
    iterations: int
    objectives: List[float]
    converged: bool


@dataclass(eq=False)
class MpcResult:
    trajectory: Trajectory
    infeasible: bool
    infeasible_knot: Optional[int] = None
    plans: List[np.ndarray] = field(default_factory=list)

    @property
    def final(self) -> np.ndarray:
        return self.trajectory.final


@dataclass(eq=False)
class SecondOrderResult:
    state: SoftPlantState
    configurations: List[np.ndarray]
    inputs: List[np.ndarray]
    rounds: int
    errors: List[Tuple[float, float]]
    infeasible: bool = False

    @property
    def lost_contact_events(self) -> int:
        return self.state.lost_contact_events


@dataclass(eq=False)
class GoalSet:
    q0: np.ndarray
    goals: List[np.ndarray]
    mean_translation: float
    mean_rotation: float


def trust_region_spec(params: PlannerParams) -> TrustRegionSpec:
    tr = params.trust_region
    return TrustRegionSpec(variant=TrustRegionVariant(tr.variant), radius=tr.radius, kappa=tr.kappa)


def goal_weight_matrix(system: SystemModel, params: PlannerParams) -> np.ndarray:
    """Q over the full configuration; the robot block is zero unless configured."""
    weights = np.zeros(system.n_q)
    weights[system.object_idx] = params.goal_weights
    if params.robot_goal_weights is not None:
        weights[system.robot_idx] = params.robot_goal_weights
    return np.diag(weights)


def goal_error(system: SystemModel, q: np.ndarray, goal: np.ndarray) -> np.ndarray:
    """Full-configuration goal residual; object rotations are wrapped, robot rows are zero."""
    error = np.zeros(system.n_q)
    q_object, _ = system.split(q)
    error[system.object_idx] = system.object_difference(goal, q_object)
    return error


def trajectory_cost(
    system: SystemModel,
    trajectory: Trajectory,
    goal: np.ndarray,
    params: PlannerParams,
    anchor: Optional[np.ndarray] = None,
) -> float:
    """Terminal goal cost plus action smoothness of a realized trajectory."""
    Q = goal_weight_matrix(system, params)
    R = np.diag(params.action_weights)
    error = goal_error(system, trajectory.final, goal)
    cost = float(error @ Q @ error)
    previous = system.split(trajectory.configurations[0])[1] if anchor is None else anchor
    for u in trajectory.inputs:
        step = u - previous
        cost += float(step @ R @ step)
        previous = u
    return cost


def _fit_horizon(plan: np.ndarray, horizon: int) -> np.ndarray:
    """Truncate a command sequence to `horizon` rows or pad it by holding the last command."""
    if plan.shape[0] >= horizon:
        return plan[:horizon].copy()
    return np.vstack([plan, np.repeat(plan[-1:], horizon - plan.shape[0], axis=0)])


class PlannerService:
    # Subproblem assembly
    @staticmethod
    def _linearize_knots(
        system: SystemModel,
        nominal: Trajectory,
        inputs: np.ndarray,
        spec: TrustRegionSpec,
    ) -> List[LinearizedDynamics]:
        horizon = inputs.shape[0]
        full = not spec.variant.action_only
        knots = []
        for t in range(horizon):
            lin = linearize(
                system, nominal.configurations[t], inputs[t], spec.kappa, with_configuration=t > 0
            )
            if t == 0 and full:
                # dq_0 = 0, so the configuration blocks never enter
                lin.A = np.zeros((system.n_q, system.n_q))
                lin.C = [np.zeros((k.cone_dim, system.n_q)) for k in lin.contacts]
            knots.append(lin)
        return knots

    @staticmethod
    def _build_program(
        system: SystemModel,
        nominal: Trajectory,
        inputs: np.ndarray,
        goal: np.ndarray,
        params: PlannerParams,
        anchor: np.ndarray,
        knots: Sequence[LinearizedDynamics],
        spec: TrustRegionSpec,
        upto: Optional[int] = None,
    ) -> Tuple[ConicProgram, float]:
        """SOCP in x = [du_0..du_{T-1}, dq_1..dq_T]; constraints only for knots <= upto."""
        T, n_q, n_u = inputs.shape[0], system.n_q, system.n_qa
        last = T - 1 if upto is None else upto
        n_x = T * n_u + T * n_q

        def u_cols(t: int) -> slice:
            return slice(t * n_u, (t + 1) * n_u)

        def q_cols(t: int) -> slice:
            start = T * n_u + (t - 1) * n_q
            return slice(start, start + n_q)

        # Terminal goal cost
        Q = goal_weight_matrix(system, params)
        error = goal_error(system, nominal.configurations[T], goal)
        P = np.zeros((n_x, n_x))
        b = np.zeros(n_x)
        P[q_cols(T), q_cols(T)] += 2.0 * Q
        b[q_cols(T)] += -2.0 * Q @ error
        constant = float(error @ Q @ error)

        # Action smoothness, anchored at u_{-1}
        R = np.diag(params.action_weights)
        rate_rows, rate_offsets = [], []
        previous = anchor
        for t in range(T):
            D = np.zeros((n_u, n_x))
            D[:, u_cols(t)] = np.eye(n_u)
            if t > 0:
                D[:, u_cols(t - 1)] -= np.eye(n_u)
            d = inputs[t] - previous
            previous = inputs[t]
            P += 2.0 * D.T @ R @ D
            b += 2.0 * D.T @ R @ d
            constant += float(d @ R @ d)
            if t <= last:
                rate_rows.append(D)
                rate_offsets.append(d)

        # Linear dynamics: dq_{t+1} = A_t dq_t + B_t du_t
        E_rows, e = [], []
        for t in range(last + 1):
            row = np.zeros((n_q, n_x))
            row[:, q_cols(t + 1)] = np.eye(n_q)
            row[:, u_cols(t)] -= knots[t].B
            if t > 0:
                row[:, q_cols(t)] -= knots[t].A
            E_rows.append(row)
            e.append(np.zeros(n_q))

        cones: List[ConeConstraint] = []
        # Input-rate bound |u_t - u_{t-1}| <= eta
        eta = params.input_bound
        for t, (D, d) in enumerate(zip(rate_rows, rate_offsets)):
            for i in range(n_u):
                cones.append(
                    ConeConstraint(A=-D[i : i + 1], c=[eta - d[i]], mu=1.0, label=f"rate{t}+{i}")
                )
                cones.append(
                    ConeConstraint(A=D[i : i + 1], c=[eta + d[i]], mu=1.0, label=f"rate{t}-{i}")
                )

        # Per-knot trust regions
        for t in range(last + 1):
            region = build(spec, knots[t])
            if spec.variant.action_only:
                S = np.zeros((n_u, n_x))
                S[:, u_cols(t)] = np.eye(n_u)
            else:
                S = np.zeros((n_q + n_u, n_x))
                if t > 0:
                    S[:n_q, q_cols(t)] = np.eye(n_q)
                S[n_q:, u_cols(t)] = np.eye(n_u)
            for cone in region.cones:
                cones.append(
                    ConeConstraint(A=cone.A @ S, c=cone.c, mu=cone.mu, label=f"k{t}:{cone.label}")
                )

        program = ConicProgram(P=P, b=b, cones=cones, E=np.vstack(E_rows), e=np.concatenate(e))
        return program, constant

    @staticmethod
    def sub_trajopt(
        system: SystemModel,
        nominal: Trajectory,
        inputs: np.ndarray,
        goal: np.ndarray,
        params: PlannerParams,
        anchor: Optional[np.ndarray] = None,
    ) -> SubTrajOptResult:
        """Optimal input perturbations around a rolled-out nominal."""
        inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
        T = inputs.shape[0]
        if anchor is None:
            anchor = system.split(nominal.configurations[0])[1]
        anchor = np.asarray(anchor, float)
        spec = trust_region_spec(params)
        knots = PlannerService._linearize_knots(system, nominal, inputs, spec)
        program, constant = PlannerService._build_program(
            system, nominal, inputs, goal, params, anchor, knots, spec
        )
        solution = solve_socp(program)

        if solution.status == SolverStatus.INFEASIBLE:
            # Locate the first knot whose constraints cannot be met
            for knot in range(T):
                prefix, _ = PlannerService._build_program(
                    system, nominal, inputs, goal, params, anchor, knots, spec, upto=knot
                )
                if solve_socp(prefix).status == SolverStatus.INFEASIBLE:
                    raise SolverInfeasibleError("Trust-region subproblem is infeasible", knot=knot)
            raise SolverInfeasibleError("Trust-region subproblem is infeasible", knot=T - 1)
        if solution.status == SolverStatus.NUMERICAL_FAILURE:
            raise NumericalFailureError("Trust-region subproblem failed numerically")
        if solution.status == SolverStatus.MAX_ITERATIONS:
            logger.warning("Trust-region subproblem hit the iteration cap; using the last iterate")

        x = solution.x
        du = x[: T * system.n_qa].reshape(T, system.n_qa)
        dq = np.vstack([np.zeros(system.n_q), x[T * system.n_qa :].reshape(T, system.n_q)])
        return SubTrajOptResult(
            du=du,
            dq=dq,
            objective=program.objective(x) + constant,
            status=solution.status,
            linearizations=knots,
        )

    @staticmethod
    def ctr_trajopt(
        system: SystemModel,
        q0: np.ndarray,
        goal: np.ndarray,
        inputs: np.ndarray,
        params: PlannerParams,
        anchor: Optional[np.ndarray] = None,
    ) -> PlanResult:
        """Alternate non-smooth rollouts and trust-region subproblems."""
        q0 = np.asarray(q0, dtype=float)
        inputs = np.atleast_2d(np.asarray(inputs, dtype=float)).copy()
        objectives: List[float] = []
        converged = False
        iteration = 0
        for iteration in range(1, params.max_iterations + 1):
            nominal = rollout(system, q0, inputs)
            result = PlannerService.sub_trajopt(system, nominal, inputs, goal, params, anchor)
            inputs = inputs + result.du
            step = float(np.abs(result.du).max(initial=0.0))
            decrease = objectives[-1] - result.objective if objectives else np.inf
            objectives.append(result.objective)
            logger.debug(
                f"CtrTrajOpt iteration {iteration}: "
                f"objective={result.objective:.3e}, |du|={step:.2e}"
            )
            if step < params.convergence_tol or decrease < settings.COST_DECREASE_TOL:
                converged = True
                break
        return PlanResult(
            inputs=inputs,
            trajectory=rollout(system, q0, inputs),
            iterations=iteration,
            objectives=objectives,
            converged=converged,
        )

    @staticmethod
    def initial_guess_heuristic(
        system: SystemModel, q0: np.ndarray, kappa_pull: Optional[float] = None
    ) -> np.ndarray:
        """Pull the robot into contact by reversing the smoothed contact force field."""
        kappa = kappa_pull or settings.HEURISTIC_KAPPA
        if not 10.0 <= kappa <= 100.0:
            raise ValueError(f"pull kappa must lie in [10, 100], got {kappa}")
        q0 = np.asarray(q0, dtype=float)
        candidates = [i for i, pair in enumerate(system.pairs) if system.is_robot_object_pair(pair)]
        tracked = [i for i in candidates if pair_distance(system, q0, i).phi < system.phi_threshold]
        tracked = tracked or candidates
        q_object, q_robot = system.split(q0)
        if not tracked:
            return q_robot

        reach = settings.HEURISTIC_CONTACT_DISTANCE
        for iteration in range(settings.HEURISTIC_MAX_ITERATIONS):
            q = system.compose(q_object, q_robot)
            contacts = contact_kinematics(system, q, tracked)
            if all(k.phi <= reach for k in contacts):
                logger.debug(f"Heuristic reached contact after {iteration} iterations")
                return q_robot

            # Reversed barrier force on the robot
            torque = np.zeros(system.n_qa)
            for k in contacts:
                if k.phi <= reach:
                    continue
                pull = (1.0 if k.cone_dim == 1 else 2.0) / (kappa * k.phi)
                torque -= k.J_a(system)[0] * pull
            step = system.h * torque / system.stiffness

            # Never close more than half of any gap in one step
            scale = 1.0
            for k in contacts:
                closing = float(k.J_a(system)[0] @ step)
                if k.phi > reach and closing < 0.0:
                    scale = min(scale, 0.5 * k.phi / -closing)
            q_robot = q_robot + scale * step
            if system.joint_lower is not None:
                q_robot = np.maximum(q_robot, system.joint_lower)
            if system.joint_upper is not None:
                q_robot = np.minimum(q_robot, system.joint_upper)

        logger.warning(
            f"Initial-guess heuristic on '{system.name}' hit {settings.HEURISTIC_MAX_ITERATIONS} "
            "iterations without reaching contact"
        )
        return q_robot

    @staticmethod
    def separate(system: SystemModel, q: np.ndarray, iterations: int = 10) -> np.ndarray:
        """Move the robot out of penetration along the contact normals; the object stays put."""
        q = np.asarray(q, dtype=float).copy()
        candidates = [i for i, pair in enumerate(system.pairs) if system.is_robot_object_pair(pair)]
        for _ in range(iterations):
            contacts = [
                k
                for k in contact_kinematics(system, q, candidates)
                if k.phi < -settings.COLLISION_TOL
            ]
            if not contacts:
                break
            normals = np.vstack([k.J_a(system)[0] for k in contacts])
            depths = np.array([-k.phi for k in contacts])
            q[system.robot_idx] = q[system.robot_idx] + lstsq(normals, depths)[0]
        return q

    @staticmethod
    def rate_limited(raw: np.ndarray, anchor: np.ndarray, eta: float) -> np.ndarray:
        """Clip a command sequence so every step, the first one from `anchor`, is at most eta."""
        limited = np.empty_like(raw)
        previous = np.asarray(anchor, dtype=float)
        for t, u in enumerate(raw):
            previous = previous + np.clip(u - previous, -eta, eta)
            limited[t] = previous
        return limited

    @staticmethod
    def mpc_rollout(
        system: SystemModel,
        q0: np.ndarray,
        goal: np.ndarray,
        params: PlannerParams,
        project_every_step: bool = False,
        anchor: Optional[np.ndarray] = None,
        warm_start: Optional[np.ndarray] = None,
    ) -> MpcResult:
        """Receding-horizon loop: plan, run the first input on the non-smooth dynamics, repeat.

        `anchor` is the command in force before the first step and defaults to the robot
        configuration of q0. `warm_start` replaces the heuristic guess of the first plan.
        With project_every_step every warm start is shifted back onto the contact manifold
        by the initial-guess heuristic.
        """
        q = np.asarray(q0, dtype=float)
        T = params.horizon
        trajectory = Trajectory(configurations=[q])
        anchor = system.split(q)[1] if anchor is None else np.asarray(anchor, dtype=float)
        plan: Optional[np.ndarray] = None
        if warm_start is not None:
            plan = _fit_horizon(np.atleast_2d(np.asarray(warm_start, dtype=float)), T)
        plans: List[np.ndarray] = []
        for t in range(params.rollout_horizon):
            if plan is None:
                raw = np.tile(PlannerService.initial_guess_heuristic(system, q), (T, 1))
            elif project_every_step:
                pulled = PlannerService.initial_guess_heuristic(system, q)
                raw = plan + (pulled - system.split(q)[1])
            else:
                raw = plan
            guess = PlannerService.rate_limited(raw, anchor, params.input_bound)
            try:
                result = PlannerService.ctr_trajopt(system, q, goal, guess, params, anchor)
            except SolverInfeasibleError as exc:
                logger.info(f"MPC terminated at step {t}: {exc.detail}")
                return MpcResult(
                    trajectory=trajectory, infeasible=True, infeasible_knot=exc.knot, plans=plans
                )
            plans.append(result.inputs)
            u = result.inputs[0]
            # Warm start for the next step
            plan = _fit_horizon(np.vstack([result.inputs[1:], result.inputs[-1:]]), T)
            step = step_nonsmooth(system, q, u)
            q = step.q_next
            anchor = u
            trajectory.inputs.append(u)
            trajectory.forces.append(step.forces_by_pair())
            trajectory.configurations.append(q)
            error = goal_error(system, q, goal)
            trajectory.costs.append(float(error @ goal_weight_matrix(system, params) @ error))
        return MpcResult(trajectory=trajectory, infeasible=False, plans=plans)

    @staticmethod
    def mpc_second_order(
        system: SystemModel,
        q0: np.ndarray,
        goal: np.ndarray,
        params: PlannerParams,
        plant: Plant,
        replan_count: Optional[int] = None,
        project_every_step: Optional[bool] = None,
    ) -> SecondOrderResult:
        """Plan on the quasidynamic model, execute whole chunks on a second-order plant, re-plan.

        Each round starts from the measured state with the robot moved out of penetration.
        The last executed command and the rest of the last plan carry over, so the input-rate
        bound holds across round boundaries.
        """
        rounds = replan_count or params.replan_count
        project = params.project_every_step if project_every_step is None else project_every_step
        state = plant.initial_state(q0)
        configurations, inputs, errors = [state.q], [], []
        infeasible = False
        completed = 0
        anchor: Optional[np.ndarray] = None
        warm_start: Optional[np.ndarray] = None
        for completed in range(1, rounds + 1):
            mpc = PlannerService.mpc_rollout(
                system,
                PlannerService.separate(system, state.q),
                goal,
                params,
                project_every_step=project,
                anchor=anchor,
                warm_start=warm_start,
            )
            if mpc.plans:
                last = mpc.plans[-1]
                warm_start = np.vstack([last[1:], last[-1:]])
            for u in mpc.trajectory.inputs:
                anchor = u
                state = plant.advance(state, u)
                configurations.append(state.q)
                inputs.append(u)
            translation, rotation = system.object_pose_error(system.split(state.q)[0], goal)
            errors.append((translation, rotation))
            logger.info(
                f"Re-plan round {completed}/{rounds}: translation error {translation:.4f}, "
                f"rotation error {rotation:.4f}"
            )
            if mpc.infeasible:
                infeasible = True
            reached = translation <= settings.EDGE_TRANSLATION_TOL
            if reached and rotation <= settings.EDGE_ROTATION_TOL:
                break
        return SecondOrderResult(
            state=state,
            configurations=configurations,
            inputs=inputs,
            rounds=completed,
            errors=errors,
            infeasible=infeasible,
        )

    @staticmethod
    def generate_goals(
        system: SystemModel,
        q_bar: np.ndarray,
        n: int,
        seed: int,
        params: PlannerParams,
        scale: float = 4.0,
        samples: Optional[int] = None,
    ) -> GoalSet:
        """Object goals on the boundary of an enlarged action-only object motion set."""
        q_bar = np.asarray(q_bar, dtype=float)
        base = trust_region_spec(params)
        spec = TrustRegionSpec(
            variant=TrustRegionVariant.RA_CTR, radius=base.radius, kappa=base.kappa
        ).scaled(scale)
        lin = linearize(system, q_bar, system.split(q_bar)[1], spec.kappa, with_configuration=False)
        region = build(spec, lin)
        drawn = sample(region, samples or settings.HULL_SAMPLES, seed)
        points = motion_set_samples(region, drawn.samples, object_only=True)
        if float(np.ptp(points, axis=0).max()) <= 1e-12:
            raise DegenerateHullError(f"object motion set of '{system.name}' collapses to a point")
        distinct = np.unique(points, axis=0)
        if distinct.shape[0] < n:
            raise DegenerateHullError(
                f"object motion set has {distinct.shape[0]} distinct points, {n} goals requested"
            )

        # Support points in random directions, each point used at most once
        goals = []
        used = np.zeros(distinct.shape[0], dtype=bool)
        for i in range(n):
            rng = make_rng(seed, 1, i)
            direction = rng.standard_normal(system.n_qo)
            support = np.where(used, -np.inf, distinct @ direction)
            index = int(np.argmax(support))
            used[index] = True
            goals.append(distinct[index].copy())

        q_object = system.split(q_bar)[0]
        errors = [system.object_pose_error(q_object, goal) for goal in goals]
        mean_translation = float(np.mean([e[0] for e in errors])) if errors else 0.0
        mean_rotation = float(np.mean([e[1] for e in errors])) if errors else 0.0
        logger.info(
            f"Generated {n} goals: mean translation {mean_translation:.4f}, "
            f"mean rotation {mean_rotation:.4f}"
        )
        return GoalSet(
            q0=q_bar, goals=goals, mean_translation=mean_translation, mean_rotation=mean_rotation
        )


planner_service = PlannerService()
