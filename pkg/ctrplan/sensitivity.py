"""Gradients of the smoothed dynamics map and its contact forces.

B and D come from the implicit function theorem on the barrier stationarity
condition, using the Hessian the Newton solver already factored. A and C are
either obtained the same way with the contact Jacobians held fixed
("frozen-geometry") or by central differences of the smoothed step
("finite-difference"), which also captures how the Jacobians change with q.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ctrplan.config import settings
from ctrplan.conic_solver import barrier_dual_jacobian, in_dual_cone
from ctrplan.cqdc import StepResult, assemble, step_smoothed
from ctrplan.models import ContactKinematics, SystemModel
from ctrplan.utils.exceptions import NumericalFailureError

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class LinearizedDynamics:
    system: SystemModel
    q_bar: np.ndarray
    u_bar: np.ndarray
    kappa: float
    f: np.ndarray
    duals: List[np.ndarray]
    B: np.ndarray
    D: List[np.ndarray]
    contacts: List[ContactKinematics]
    A: Optional[np.ndarray] = None
    C: Optional[List[np.ndarray]] = None
    mode: Optional[str] = None
    duals_interior: bool = True
    nominal: Optional[StepResult] = field(default=None, repr=False)

    @property
    def pair_indices(self) -> List[int]:
        return [k.pair_index for k in self.contacts]

    @property
    def has_configuration_gradients(self) -> bool:
        return self.A is not None

    def predict(self, dq: np.ndarray, du: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
        """First-order (q_next, duals) at (q_bar + dq, u_bar + du)."""
        dq = np.asarray(dq, dtype=float)
        du = np.asarray(du, dtype=float)
        q_next = self.f + self.B @ du
        duals = [lam + D_i @ du for lam, D_i in zip(self.duals, self.D)]
        if np.any(dq != 0.0):
            if self.A is None or self.C is None:
                raise ValueError("configuration gradients were not computed for this linearization")
            q_next = q_next + self.A @ dq
            duals = [lam + C_i @ dq for lam, C_i in zip(duals, self.C)]
        return q_next, duals


def _cone_mu(k: ContactKinematics) -> float:
    return k.mu if k.cone_dim > 1 else 1.0


def _solve(hessian: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return cho_solve(cho_factor(hessian), rhs)
    except LinAlgError as exc:
        raise NumericalFailureError(f"barrier Hessian is not positive definite: {exc}") from exc


def _dual_jacobians(result: StepResult) -> List[np.ndarray]:
    return [
        barrier_dual_jacobian(v, _cone_mu(k), result.kappa)
        for k, v in zip(result.contacts, result.slacks)
    ]


def linearize_u(result: StepResult) -> Tuple[np.ndarray, List[np.ndarray]]:
    """(B, D_i) at a smoothed step."""
    system = result.problem.system
    # -db/du = [0; K_a]
    rhs = np.zeros((system.n_q, system.n_qa))
    rhs[system.robot_idx, np.arange(system.n_qa)] = system.stiffness
    B = _solve(result.hessian, rhs)
    D = [G @ k.J @ B for G, k in zip(_dual_jacobians(result), result.contacts)]
    return B, D


def _frozen_geometry_q(result: StepResult) -> Tuple[np.ndarray, List[np.ndarray]]:
    system = result.problem.system
    o = system.object_idx
    db_dq = np.zeros((system.n_q, system.n_q))
    db_dq[np.ix_(o, o)] = -system.scaled_object_mass
    # With J fixed the normal slack keeps phi(q) + J_n (q_next - q);
    # only the tangential offset moves
    dc_dq = []
    for k in result.contacts:
        block = np.zeros_like(k.J)
        block[1:] = -k.J[1:]
        dc_dq.append(block)
    rhs = -db_dq
    barrier_hessians = [-G for G in _dual_jacobians(result)]
    for k, H_i, dc in zip(result.contacts, barrier_hessians, dc_dq):
        rhs = rhs - k.J.T @ H_i @ dc
    A = _solve(result.hessian, rhs)
    C = [-H_i @ (k.J @ A + dc) for k, H_i, dc in zip(result.contacts, barrier_hessians, dc_dq)]
    return A, C


def _central_difference(
    evaluate: Callable[[np.ndarray], Tuple[np.ndarray, List[np.ndarray]]],
    x: np.ndarray,
    step: float,
) -> Tuple[np.ndarray, List[np.ndarray]]:
    columns, dual_columns = [], []
    for j in range(x.shape[0]):
        offset = np.zeros_like(x)
        offset[j] = step
        q_plus, duals_plus = evaluate(x + offset)
        q_minus, duals_minus = evaluate(x - offset)
        columns.append((q_plus - q_minus) / (2.0 * step))
        dual_columns.append([(lp - lm) / (2.0 * step) for lp, lm in zip(duals_plus, duals_minus)])
    jacobian = np.column_stack(columns) if columns else np.zeros((0, 0))
    n_contacts = len(dual_columns[0]) if dual_columns else 0
    dual_jacobians = [np.column_stack([col[i] for col in dual_columns]) for i in range(n_contacts)]
    return jacobian, dual_jacobians


def finite_difference_q(
    system: SystemModel,
    q_bar: np.ndarray,
    u_bar: np.ndarray,
    kappa: float,
    pair_indices: Sequence[int],
    step: Optional[float] = None,
) -> Tuple[np.ndarray, List[np.ndarray]]:
    step = step or settings.FD_STEP

    def evaluate(q: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
        result = step_smoothed(system, q, u_bar, kappa, pair_indices)
        return result.q_next, result.duals

    return _central_difference(evaluate, np.asarray(q_bar, dtype=float), step)


def finite_difference_u(
    system: SystemModel,
    q_bar: np.ndarray,
    u_bar: np.ndarray,
    kappa: float,
    pair_indices: Sequence[int],
    step: Optional[float] = None,
) -> Tuple[np.ndarray, List[np.ndarray]]:
    step = step or settings.FD_STEP

    def evaluate(u: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
        result = step_smoothed(system, q_bar, u, kappa, pair_indices)
        return result.q_next, result.duals

    return _central_difference(evaluate, np.asarray(u_bar, dtype=float), step)


def linearize_q(
    result: StepResult, mode: Optional[str] = None
) -> Tuple[np.ndarray, List[np.ndarray]]:
    """(A, C_i) at a smoothed step, in frozen-geometry or finite-difference mode."""
    mode = mode or settings.LINEARIZATION_MODE
    if mode == "frozen-geometry":
        return _frozen_geometry_q(result)
    if mode == "finite-difference":
        problem = result.problem
        return finite_difference_q(
            problem.system, problem.q, problem.u, result.kappa, problem.pair_indices
        )
    raise ValueError(f"unsupported linearization mode '{mode}'")


def linearize(
    system: SystemModel,
    q_bar: np.ndarray,
    u_bar: np.ndarray,
    kappa: float,
    with_configuration: bool = True,
    mode: Optional[str] = None,
) -> LinearizedDynamics:
    """Smoothed step at (q_bar, u_bar) plus its gradients."""
    result = step_smoothed(system, q_bar, u_bar, kappa)
    B, D = linearize_u(result)
    A, C = None, None
    if with_configuration:
        mode = mode or settings.LINEARIZATION_MODE
        A, C = linearize_q(result, mode)

    interior = all(
        in_dual_cone(lam, _cone_mu(k), tol=-1e-12) for k, lam in zip(result.contacts, result.duals)
    )
    if not interior:
        logger.warning(
            f"Nominal contact forces of '{system.name}' are not strictly inside the friction cones"
        )
    return LinearizedDynamics(
        system=system,
        q_bar=np.asarray(q_bar, dtype=float),
        u_bar=np.asarray(u_bar, dtype=float),
        kappa=kappa,
        f=result.q_next,
        duals=result.duals,
        B=B,
        D=D,
        contacts=result.contacts,
        A=A,
        C=C,
        mode=mode if with_configuration else None,
        duals_interior=interior,
        nominal=result,
    )


def _complementarity_residual(
    lam: np.ndarray, v: np.ndarray, mu: float, kappa: float
) -> np.ndarray:
    """Central-path condition written as a polynomial (Jordan product) in the scaled cone."""
    if v.size == 1:
        return np.array([lam[0] * v[0] - 1.0 / kappa])
    v_scaled = np.concatenate(([v[0] / mu], v[1:]))
    lam_scaled = np.concatenate(([mu * lam[0]], lam[1:]))
    return np.concatenate(
        (
            [lam_scaled @ v_scaled - 2.0 / kappa],
            lam_scaled[0] * v_scaled[1:] + v_scaled[0] * lam_scaled[1:],
        )
    )


def taylor_residual(lin: LinearizedDynamics, dq: np.ndarray, du: np.ndarray) -> float:
    """Norm of the smoothed optimality conditions at the first-order prediction."""
    q_next, duals = lin.predict(dq, du)
    q = lin.q_bar + np.asarray(dq, float)
    u = lin.u_bar + np.asarray(du, float)
    problem = assemble(lin.system, q, u, lin.pair_indices)
    stationarity = problem.P @ q_next + problem.b
    for k, lam in zip(problem.contacts, duals):
        stationarity = stationarity - k.J.T @ lam
    parts = [stationarity]
    for k, lam, v in zip(problem.contacts, duals, problem.slacks(q_next)):
        parts.append(_complementarity_residual(lam, v, _cone_mu(k), lin.kappa))
    return float(np.linalg.norm(np.concatenate(parts)))


# Gradient check
@dataclass(frozen=True)
class GradientCheckEntry:
    block: str
    row: int
    col: int
    analytic: float
    numeric: float
    relative_error: float


def _compare(block: str, analytic: np.ndarray, numeric: np.ndarray) -> List[GradientCheckEntry]:
    floor = 1e-6 * max(1.0, float(np.abs(numeric).max(initial=0.0)))
    entries = []
    for (i, j), value in np.ndenumerate(analytic):
        reference = numeric[i, j]
        denominator = max(abs(reference), abs(value), floor)
        entries.append(
            GradientCheckEntry(
                block=block,
                row=i,
                col=j,
                analytic=float(value),
                numeric=float(reference),
                relative_error=float(abs(value - reference) / denominator),
            )
        )
    return entries


def gradient_check(
    system: SystemModel,
    q_bar: np.ndarray,
    u_bar: np.ndarray,
    kappa: float,
    step: Optional[float] = None,
) -> List[GradientCheckEntry]:
    """Analytic B, D and frozen-geometry A, C against central differences."""
    lin = linearize(system, q_bar, u_bar, kappa, with_configuration=True, mode="frozen-geometry")
    B_fd, D_fd = finite_difference_u(system, q_bar, u_bar, kappa, lin.pair_indices, step)
    A_fd, C_fd = finite_difference_q(system, q_bar, u_bar, kappa, lin.pair_indices, step)
    entries = _compare("B", lin.B, B_fd)
    entries += _compare("A", lin.A, A_fd)
    for pair, D_i, D_num in zip(lin.pair_indices, lin.D, D_fd):
        entries += _compare(f"D{pair}", D_i, D_num)
    for pair, C_i, C_num in zip(lin.pair_indices, lin.C, C_fd):
        entries += _compare(f"C{pair}", C_i, C_num)
    worst = max((e.relative_error for e in entries if e.block[0] in "BD"), default=0.0)
    logger.info(f"Gradient check on '{system.name}': max relative error of B/D = {worst:.2e}")
    return entries
