"""Second-order penalty-contact plant used to close the loop around the planner.

Contacts are springs with damping along the normal and regularized Coulomb
friction along the tangent; the robot is a point mass per DOF driven by the
stiffness controller K_a (u - q_a) - D v_a. Integration is semi-implicit Euler.
"""
import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ctrplan.config import settings
from ctrplan.cqdc import step_nonsmooth
from ctrplan.geometry import contact_kinematics, pair_distance
from ctrplan.models import SystemModel
from ctrplan.utils.exceptions import PlantDivergedError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SoftPlantParams:
    contact_stiffness: float = 2000.0
    contact_damping: float = 2.0
    friction_slope: float = 50.0
    robot_inertia: float = 0.1
    dt: float = 1e-3

    def __post_init__(self) -> None:
        if self.dt <= 0 or self.contact_stiffness <= 0 or self.robot_inertia <= 0:
            raise ValueError("plant dt, contact stiffness and robot inertia must be positive")


@dataclass(frozen=True, eq=False)
class SoftPlantState:
    q: np.ndarray
    v: np.ndarray
    time: float = 0.0
    steps: int = 0
    work: float = 0.0  # work done by the controller and external forces
    separation_streak: int = 0
    lost_contact_events: int = 0

    @property
    def velocity_norm(self) -> float:
        return float(np.linalg.norm(self.v))


class SoftPlant:
    def __init__(self, system: SystemModel, params: Optional[SoftPlantParams] = None):
        self.system = system
        self.params = params or SoftPlantParams(dt=settings.SOFTSIM_DT)
        n_q = system.n_q
        self.mass = np.zeros((n_q, n_q))
        self.mass[np.ix_(system.object_idx, system.object_idx)] = system.object_mass
        self.mass[system.robot_idx, system.robot_idx] = self.params.robot_inertia
        self.mass_inv = np.linalg.inv(self.mass)
        # Critically damped position controller
        self.robot_damping = 2.0 * np.sqrt(system.stiffness * self.params.robot_inertia)
        # Viscous resistance matching the quasidynamic regularization eps * M_o / h
        self.object_damping = system.epsilon * system.object_mass / system.h
        self._tracked = [
            i for i, pair in enumerate(system.pairs) if system.is_robot_object_pair(pair)
        ]

    def initial_state(self, q: np.ndarray) -> SoftPlantState:
        q = np.asarray(q, dtype=float)
        return SoftPlantState(q=q.copy(), v=np.zeros_like(q))

    def kinetic_energy(self, state: SoftPlantState) -> float:
        return float(0.5 * state.v @ self.mass @ state.v)

    def _contact_force(self, q: np.ndarray, v: np.ndarray) -> np.ndarray:
        force = np.zeros(self.system.n_q)
        for i, pair in enumerate(self.system.pairs):
            if pair_distance(self.system, q, i).phi >= 0.0:
                continue
            (k,) = contact_kinematics(self.system, q, [i])
            phi_dot = k.J_n @ v
            normal = max(
                0.0, -self.params.contact_stiffness * k.phi - self.params.contact_damping * phi_dot
            )
            force += normal * k.J_n
            if k.cone_dim > 1 and normal > 0.0:
                slip = float(k.J_t[0] @ v)
                magnitude = min(pair.mu * normal, self.params.friction_slope * abs(slip))
                friction = -magnitude * np.sign(slip)
                force += friction * k.J_t[0]
        return force

    def step_soft(
        self, state: SoftPlantState, u: np.ndarray, dt: Optional[float] = None
    ) -> SoftPlantState:
        """One semi-implicit Euler step under position command u."""
        dt = dt or self.params.dt
        system = self.system
        q, v = state.q, state.v
        o, a = system.object_idx, system.robot_idx
        u = np.asarray(u, dtype=float)

        # Applied forces
        applied = np.zeros(system.n_q)
        applied[a] = system.stiffness * (u - q[a]) + system.tau_robot
        applied[o] = system.tau_object
        dissipative = np.zeros(system.n_q)
        dissipative[a] = -self.robot_damping * v[a]
        dissipative[o] = -self.object_damping @ v[o]
        force = applied + dissipative + self._contact_force(q, v)

        v_next = v + dt * self.mass_inv @ force
        q_next = q + dt * v_next
        steps = state.steps + 1
        norm = float(np.linalg.norm(q_next))
        finite = np.all(np.isfinite(q_next)) and np.all(np.isfinite(v_next))
        if not finite or norm > settings.WORKSPACE_BOUND:
            raise PlantDivergedError(steps, norm)

        # Lost-contact bookkeeping
        streak, events = state.separation_streak, state.lost_contact_events
        if self._tracked:
            gap = min(pair_distance(system, q_next, i).phi for i in self._tracked)
            if gap > settings.LOST_CONTACT_DISTANCE:
                streak += 1
                if streak == settings.LOST_CONTACT_STEPS + 1:
                    events += 1
            else:
                streak = 0
        return replace(
            state,
            q=q_next,
            v=v_next,
            time=state.time + dt,
            steps=steps,
            work=state.work + dt * float(applied @ v_next),
            separation_streak=streak,
            lost_contact_events=events,
        )

    def advance(
        self, state: SoftPlantState, u: np.ndarray, duration: Optional[float] = None
    ) -> SoftPlantState:
        """Hold command u for one control period (h by default) in substeps of dt."""
        duration = self.system.h if duration is None else duration
        substeps = max(1, int(round(duration / self.params.dt)))
        for _ in range(substeps):
            state = self.step_soft(state, u)
        return state


class QuasidynamicPlant:
    """The convex quasidynamic model behind the same plant interface."""

    def __init__(self, system: SystemModel):
        self.system = system

    def initial_state(self, q: np.ndarray) -> SoftPlantState:
        q = np.asarray(q, dtype=float)
        return SoftPlantState(q=q.copy(), v=np.zeros_like(q))

    def advance(
        self, state: SoftPlantState, u: np.ndarray, duration: Optional[float] = None
    ) -> SoftPlantState:
        result = step_nonsmooth(self.system, state.q, u)
        return replace(
            state,
            q=result.q_next,
            time=state.time + self.system.h,
            steps=state.steps + 1,
        )
