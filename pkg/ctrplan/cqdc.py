"""Convex quasidynamic contact dynamics: assembly, non-smooth and smoothed steps, modes."""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from ctrplan.config import settings
from ctrplan.conic_solver import (
    ConeConstraint,
    ConicProgram,
    SolverStatus,
    barrier_dual,
    solve_barrier_newton,
    solve_socp,
)
from ctrplan.geometry import contact_kinematics, detect_contacts
from ctrplan.models import ContactKinematics, ContactMode, SystemModel, Trajectory
from ctrplan.utils.exceptions import NumericalFailureError, SolverInfeasibleError

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class DynamicsProblem:
    system: SystemModel
    q: np.ndarray
    u: np.ndarray
    P: np.ndarray
    b: np.ndarray
    contacts: List[ContactKinematics]

    @property
    def pair_indices(self) -> List[int]:
        return [k.pair_index for k in self.contacts]

    def to_program(self) -> ConicProgram:
        cones = [
            ConeConstraint(
                A=k.J, c=k.c, mu=k.mu if k.cone_dim > 1 else 1.0, label=f"pair{k.pair_index}"
            )
            for k in self.contacts
        ]
        return ConicProgram(P=self.P, b=self.b, cones=cones)

    def slacks(self, q_next: np.ndarray) -> List[np.ndarray]:
        return [k.J @ q_next + k.c for k in self.contacts]

    def force_balance_residual(self, q_next: np.ndarray, duals: Sequence[np.ndarray]) -> float:
        residual = self.P @ q_next + self.b
        for k, lam in zip(self.contacts, duals):
            residual = residual - k.J.T @ lam
        return float(np.linalg.norm(residual))


@dataclass(eq=False)
class StepResult:
    q_next: np.ndarray
    duals: List[np.ndarray]
    slacks: List[np.ndarray]
    kappa: float
    status: SolverStatus
    problem: DynamicsProblem
    hessian: Optional[np.ndarray] = None
    iterations: int = 0

    @property
    def contacts(self) -> List[ContactKinematics]:
        return self.problem.contacts

    @property
    def force_balance_residual(self) -> float:
        return self.problem.force_balance_residual(self.q_next, self.duals)

    def forces_by_pair(self) -> Dict[int, np.ndarray]:
        return {k.pair_index: lam for k, lam in zip(self.contacts, self.duals)}


def assemble(
    system: SystemModel,
    q: np.ndarray,
    u: np.ndarray,
    pair_indices: Optional[Sequence[int]] = None,
) -> DynamicsProblem:
    """Cost P, b and contact cones of the one-step convex program at (q, u).

    Contacts default to the pairs within the system's detection threshold; passing
    pair_indices fixes the contact list (used by finite differencing).
    """
    q = np.asarray(q, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    if q.shape != (system.n_q,) or u.shape != (system.n_qa,):
        raise ValueError(
            f"expected q of size {system.n_q} and u of size {system.n_qa}, "
            f"got {q.size} and {u.size}"
        )
    o, a = system.object_idx, system.robot_idx
    q_object, _ = system.split(q)

    # Cost
    P = np.zeros((system.n_q, system.n_q))
    P[np.ix_(o, o)] = system.scaled_object_mass
    P[a, a] = system.stiffness
    b = np.zeros(system.n_q)
    b[o] = -(system.scaled_object_mass @ q_object + system.tau_object)
    b[a] = -(system.stiffness * u + system.tau_robot)

    # Contacts
    if pair_indices is None:
        contacts = detect_contacts(system, q)
    else:
        contacts = contact_kinematics(system, q, pair_indices)
    return DynamicsProblem(system=system, q=q, u=u, P=P, b=b, contacts=contacts)


def step_nonsmooth(
    system: SystemModel,
    q: np.ndarray,
    u: np.ndarray,
    pair_indices: Optional[Sequence[int]] = None,
) -> StepResult:
    """f(q, u): solve the contact SOCP exactly."""
    problem = assemble(system, q, u, pair_indices)
    solution = solve_socp(problem.to_program(), x0=problem.q)
    if solution.status == SolverStatus.INFEASIBLE:
        raise SolverInfeasibleError(f"dynamics step of '{system.name}' is infeasible")
    if solution.status == SolverStatus.NUMERICAL_FAILURE:
        raise NumericalFailureError(f"dynamics step of '{system.name}' failed numerically")
    if solution.status == SolverStatus.MAX_ITERATIONS:
        logger.warning(f"Dynamics step of '{system.name}' hit the iteration cap")
    return StepResult(
        q_next=solution.x,
        duals=solution.duals,
        slacks=solution.slacks,
        kappa=np.inf,
        status=solution.status,
        problem=problem,
        iterations=solution.iterations,
    )


def retraction_start(problem: DynamicsProblem) -> np.ndarray:
    """Start at q and push each violated cone along its normal row up to RETRACTION_SLACK."""
    x = problem.q.copy()
    for k in problem.contacts:
        v = k.J @ x + k.c
        if k.cone_dim == 1:
            shortfall = settings.RETRACTION_SLACK - v[0]
        else:
            shortfall = settings.RETRACTION_SLACK + k.mu * np.linalg.norm(v[1:]) - v[0]
        row_norm = k.J_n @ k.J_n
        if shortfall > 0.0 and row_norm > 0.0:
            x = x + shortfall * k.J_n / row_norm
    return x


def step_smoothed(
    system: SystemModel,
    q: np.ndarray,
    u: np.ndarray,
    kappa: float,
    pair_indices: Optional[Sequence[int]] = None,
) -> StepResult:
    """f_kappa(q, u): solve the log-barrier relaxation; duals come from the central path."""
    problem = assemble(system, q, u, pair_indices)
    result = solve_barrier_newton(problem.to_program(), kappa, x0=retraction_start(problem))
    return StepResult(
        q_next=result.x,
        duals=result.duals,
        slacks=result.slacks,
        kappa=kappa,
        status=SolverStatus.OPTIMAL if result.converged else SolverStatus.MAX_ITERATIONS,
        problem=problem,
        hessian=result.hessian,
        iterations=result.iterations,
    )


def recover_duals(problem: DynamicsProblem, q_next: np.ndarray, kappa: float) -> List[np.ndarray]:
    """Central-path duals of every contact cone at the given next configuration."""
    return [
        barrier_dual(v, k.mu if k.cone_dim > 1 else 1.0, kappa)
        for k, v in zip(problem.contacts, problem.slacks(q_next))
    ]


def classify_mode(result: StepResult, tol: float = 1e-6) -> List[ContactMode]:
    """Contact mode of each contact; sliding+ means the friction force on body A points along +t."""
    modes = []
    for k, lam, v in zip(result.contacts, result.duals, result.slacks):
        scale = max(1.0, float(np.linalg.norm(lam)))
        if lam[0] <= tol * scale and v[0] > tol:
            modes.append(ContactMode.SEPARATION)
        elif k.cone_dim == 1:
            modes.append(ContactMode.STICKING)
        elif k.mu * lam[0] - np.linalg.norm(lam[1:]) > tol * scale:
            modes.append(ContactMode.STICKING)
        elif lam[1] > 0.0:
            modes.append(ContactMode.SLIDING_POS)
        else:
            modes.append(ContactMode.SLIDING_NEG)
    return modes


@dataclass(eq=False)
class ModeMapEntry:
    u: np.ndarray
    modes: Dict[int, ContactMode]
    q_next: np.ndarray
    q_next_smoothed: Optional[np.ndarray] = None


def mode_map(
    system: SystemModel,
    q: np.ndarray,
    u_grid: Sequence[np.ndarray],
    kappa: Optional[float] = None,
) -> List[ModeMapEntry]:
    """Classify the non-smooth step over a grid of commands, optionally with the smoothed step."""
    entries = []
    for u in u_grid:
        result = step_nonsmooth(system, q, u)
        modes = dict(zip(result.problem.pair_indices, classify_mode(result)))
        smoothed = None
        if kappa is not None:
            smoothed = step_smoothed(system, q, u, kappa).q_next
        entries.append(
            ModeMapEntry(
                u=np.asarray(u, float), modes=modes, q_next=result.q_next, q_next_smoothed=smoothed
            )
        )
    return entries


def rollout(
    system: SystemModel,
    q0: np.ndarray,
    inputs: Sequence[np.ndarray],
    kappa: Optional[float] = None,
) -> Trajectory:
    """Roll the non-smooth dynamics (smoothed when kappa is given) through the inputs."""
    trajectory = Trajectory(configurations=[np.asarray(q0, dtype=float)])
    for u in inputs:
        q = trajectory.configurations[-1]
        if kappa is None:
            result = step_nonsmooth(system, q, u)
        else:
            result = step_smoothed(system, q, u, kappa)
        trajectory.inputs.append(np.asarray(u, dtype=float))
        trajectory.forces.append(result.forces_by_pair())
        trajectory.configurations.append(result.q_next)
    return trajectory


# Export helper for trace columns
def trace_header(system: SystemModel) -> List[str]:
    return (
        ["t"]
        + [f"q{i}" for i in range(system.n_q)]
        + [f"u{i}" for i in range(system.n_qa)]
        + [f"lambda_n{i}" for i in range(len(system.pairs))]
    )
