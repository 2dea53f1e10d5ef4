"""Trust regions as explicit conic constraint sets, plus sampling and motion/wrench sets.

A region lives in the perturbation variable dz, which is (dq, du) for the full
variants and du alone for the action-only ones. Every constraint is a cone
A dz + c in K.
"""
import enum
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ctrplan.config import settings
from ctrplan.conic_solver import ConeConstraint, HullResult, dual_mu, hull_and_radius
from ctrplan.models import SystemModel
from ctrplan.sensitivity import LinearizedDynamics
from ctrplan.utils.exceptions import DegenerateRegionError
from ctrplan.utils.rng import make_rng

logger = logging.getLogger(__name__)


class TrustRegionVariant(str, enum.Enum):
    ETR = "etr"
    CTR = "ctr"
    R_CTR = "r-ctr"
    A_ETR = "a-etr"
    A_CTR = "a-ctr"
    RA_CTR = "ra-ctr"

    @property
    def action_only(self) -> bool:
        return self in (
            TrustRegionVariant.A_ETR, TrustRegionVariant.A_CTR, TrustRegionVariant.RA_CTR
        )

    @property
    def primal(self) -> bool:
        return self in (TrustRegionVariant.CTR, TrustRegionVariant.A_CTR)

    @property
    def dual(self) -> bool:
        return self in (
            TrustRegionVariant.CTR,
            TrustRegionVariant.A_CTR,
            TrustRegionVariant.R_CTR,
            TrustRegionVariant.RA_CTR,
        )


@dataclass(frozen=True, eq=False)
class TrustRegionSpec:
    variant: TrustRegionVariant = TrustRegionVariant.RA_CTR
    radius: float = 0.05
    kappa: float = 100.0
    sigma: Optional[np.ndarray] = None
    use_joint_limits: bool = True
    use_torque_limits: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", TrustRegionVariant(self.variant))
        if self.radius <= 0 or self.kappa <= 0:
            raise ValueError("trust region radius and kappa must be positive")
        if self.sigma is not None:
            sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
            if not np.allclose(sigma, sigma.T) or np.linalg.eigvalsh(sigma).min() <= 0:
                raise ValueError("trust region matrix must be symmetric positive definite")
            object.__setattr__(self, "sigma", sigma)

    def sigma_matrix(self, dim: int) -> np.ndarray:
        if self.sigma is None:
            return np.eye(dim) / self.radius**2
        if self.sigma.shape != (dim, dim):
            raise ValueError(f"trust region matrix must be {dim}x{dim}, got {self.sigma.shape}")
        return self.sigma

    def scaled(self, factor: float) -> "TrustRegionSpec":
        sigma = None if self.sigma is None else self.sigma / factor**2
        return TrustRegionSpec(
            variant=self.variant,
            radius=self.radius * factor,
            kappa=self.kappa,
            sigma=sigma,
            use_joint_limits=self.use_joint_limits,
            use_torque_limits=self.use_torque_limits,
        )


@dataclass(eq=False)
class TrustRegionConstraints:
    spec: TrustRegionSpec
    lin: LinearizedDynamics
    ellipsoid: ConeConstraint
    factor: np.ndarray  # L with sigma = L'L
    primal: List[ConeConstraint] = field(default_factory=list)
    dual: List[ConeConstraint] = field(default_factory=list)
    limits: List[ConeConstraint] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return int(self.factor.shape[0])

    @property
    def action_only(self) -> bool:
        return self.spec.variant.action_only

    @property
    def cones(self) -> List[ConeConstraint]:
        return [self.ellipsoid, *self.primal, *self.dual, *self.limits]

    def split(self, dz: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(dq, du) from a perturbation sample."""
        dz = np.asarray(dz, dtype=float)
        system = self.lin.system
        if self.action_only:
            return np.zeros(dz.shape[:-1] + (system.n_q,)), dz
        return dz[..., : system.n_q], dz[..., system.n_q :]


def _gain(lin: LinearizedDynamics, action_only: bool) -> np.ndarray:
    """d q_next / d dz."""
    if action_only:
        return lin.B
    if lin.A is None:
        raise ValueError("full trust regions need configuration gradients")
    return np.hstack([lin.A, lin.B])


def _dual_gain(lin: LinearizedDynamics, i: int, action_only: bool) -> np.ndarray:
    if action_only:
        return lin.D[i]
    if lin.C is None:
        raise ValueError("full trust regions need configuration gradients")
    return np.hstack([lin.C[i], lin.D[i]])


def _action_selector(system: SystemModel, action_only: bool) -> np.ndarray:
    """Matrix mapping dz to du."""
    if action_only:
        return np.eye(system.n_qa)
    return np.hstack([np.zeros((system.n_qa, system.n_q)), np.eye(system.n_qa)])


def _scalar_cones(A: np.ndarray, c: np.ndarray, label: str) -> List[ConeConstraint]:
    return [
        ConeConstraint(A=A[i : i + 1], c=c[i : i + 1], mu=1.0, label=f"{label}{i}")
        for i in range(A.shape[0])
    ]


def build(spec: TrustRegionSpec, lin: LinearizedDynamics) -> TrustRegionConstraints:
    """Conic constraint set of the requested variant at a linearization."""
    system = lin.system
    action_only = spec.variant.action_only
    dim = system.n_qa if action_only else system.n_q + system.n_qa
    sigma = spec.sigma_matrix(dim)
    L = np.linalg.cholesky(sigma).T

    # Ellipsoid: ||L dz|| <= 1
    ellipsoid = ConeConstraint(
        A=np.vstack([np.zeros((1, dim)), L]),
        c=np.concatenate(([1.0], np.zeros(dim))),
        mu=1.0,
        label="ellipsoid",
    )
    constraints = TrustRegionConstraints(spec=spec, lin=lin, ellipsoid=ellipsoid, factor=L)

    if spec.variant.primal:
        G = _gain(lin, action_only)
        for k in lin.contacts:
            constraints.primal.append(
                ConeConstraint(
                    A=k.J @ G,
                    c=k.J @ lin.f + k.c,
                    mu=k.mu if k.cone_dim > 1 else 1.0,
                    label=f"primal{k.pair_index}",
                )
            )
    if spec.variant.dual:
        for i, k in enumerate(lin.contacts):
            constraints.dual.append(
                ConeConstraint(
                    A=_dual_gain(lin, i, action_only),
                    c=lin.duals[i],
                    mu=dual_mu(k.mu) if k.cone_dim > 1 else 1.0,
                    label=f"dual{k.pair_index}",
                )
            )
        if not lin.duals_interior:
            logger.warning(
                "Trust region built at a nominal whose duals touch the friction cone boundary"
            )

    S = _action_selector(system, action_only)
    if spec.use_joint_limits and system.joint_lower is not None:
        constraints.limits += _scalar_cones(S, lin.u_bar - system.joint_lower, "joint_lower")
    if spec.use_joint_limits and system.joint_upper is not None:
        constraints.limits += _scalar_cones(-S, system.joint_upper - lin.u_bar, "joint_upper")
    has_torque_limits = system.torque_lower is not None or system.torque_upper is not None
    if spec.use_torque_limits and has_torque_limits:
        # tau = K_a (q_next^a - u)
        G_a = _gain(lin, action_only)[system.robot_idx]
        K = np.diag(system.stiffness)
        torque_A = K @ (G_a - S)
        torque_c = K @ (lin.f[system.robot_idx] - lin.u_bar)
        if system.torque_lower is not None:
            constraints.limits += _scalar_cones(
                torque_A, torque_c - system.torque_lower, "torque_lower"
            )
        if system.torque_upper is not None:
            constraints.limits += _scalar_cones(
                -torque_A, system.torque_upper - torque_c, "torque_upper"
            )
    return constraints


def _cone_mask(V: np.ndarray, mu: float, tol: float) -> np.ndarray:
    if V.shape[1] == 1:
        return V[:, 0] >= -tol
    return V[:, 0] >= mu * np.linalg.norm(V[:, 1:], axis=1) - tol


def contains_batch(cs: TrustRegionConstraints, Z: np.ndarray, tol: float = 0.0) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    mask = np.ones(Z.shape[0], dtype=bool)
    for cone in cs.cones:
        mask &= _cone_mask(Z @ cone.A.T + cone.c, cone.mu, tol)
    return mask


def contains(cs: TrustRegionConstraints, dz: np.ndarray, tol: float = 0.0) -> bool:
    return bool(contains_batch(cs, np.asarray(dz, dtype=float)[None, :], tol)[0])


@dataclass(eq=False)
class SampleSet:
    samples: np.ndarray
    proposals: int

    @property
    def acceptance_rate(self) -> float:
        return self.samples.shape[0] / self.proposals if self.proposals else 0.0


def sample_ellipsoid(factor: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform samples from {dz : ||L dz|| <= 1}."""
    dim = factor.shape[0]
    directions = rng.standard_normal((n, dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = rng.random(n) ** (1.0 / dim)
    ball = directions * radii[:, None]
    return np.linalg.solve(factor, ball.T).T


def sample(cs: TrustRegionConstraints, n: int, seed: int) -> SampleSet:
    """Rejection-sample n points of the region, proposing uniformly from its ellipsoid."""
    if n < 1:
        raise ValueError("n must be at least 1")
    accepted: List[np.ndarray] = []
    count, proposals, chunk = 0, 0, 0
    while count < n:
        rng = make_rng(seed, chunk)
        proposed = sample_ellipsoid(cs.factor, settings.SAMPLE_CHUNK_SIZE, rng)
        kept = proposed[contains_batch(cs, proposed)]
        accepted.append(kept)
        count += kept.shape[0]
        proposals += proposed.shape[0]
        chunk += 1
        starved = count / proposals < settings.SAMPLE_MIN_ACCEPTANCE
        if proposals >= settings.SAMPLE_MAX_PROPOSALS and starved:
            raise DegenerateRegionError(count / proposals, proposals)
    samples = np.vstack(accepted)[:n]
    logger.debug(
        f"Sampled {n} points of {cs.spec.variant.value} with acceptance {count / proposals:.3f}"
    )
    return SampleSet(samples=samples, proposals=proposals)


def motion_set_samples(
    cs: TrustRegionConstraints, samples: np.ndarray, object_only: bool = False
) -> np.ndarray:
    """Linearized next configurations f + G dz for each sample."""
    lin = cs.lin
    points = lin.f + np.atleast_2d(samples) @ _gain(lin, cs.action_only).T
    if object_only:
        return points[:, lin.system.object_idx]
    return points


@dataclass(eq=False)
class WrenchSamples:
    forces: List[np.ndarray]  # per contact, (n, d)
    wrenches: List[np.ndarray]  # per contact, (n, n_qo)
    total: np.ndarray  # (n, n_qo), includes tau_o


def wrench_set_samples(lin: LinearizedDynamics, du_samples: np.ndarray) -> WrenchSamples:
    """Contact forces, their object wrenches J_o' lambda and the summed wrench per du sample."""
    system = lin.system
    du_samples = np.atleast_2d(np.asarray(du_samples, dtype=float))
    total = np.tile(system.tau_object, (du_samples.shape[0], 1))
    forces, wrenches = [], []
    for k, lam, D_i in zip(lin.contacts, lin.duals, lin.D):
        force = lam + du_samples @ D_i.T
        wrench = force @ k.J_o(system)
        forces.append(force)
        wrenches.append(wrench)
        total = total + wrench
    return WrenchSamples(forces=forces, wrenches=wrenches, total=total)


def motion_set_from_wrench(
    system: SystemModel, q_bar: np.ndarray, wrenches: np.ndarray
) -> np.ndarray:
    """Quasistatic object motion q_o + (h^2 / eps) M_o^-1 w for each wrench."""
    q_object, _ = system.split(q_bar)
    wrenches = np.atleast_2d(np.asarray(wrenches, dtype=float))
    return q_object + np.linalg.solve(system.scaled_object_mass, wrenches.T).T


def wrench_hull(wrenches: np.ndarray) -> HullResult:
    return hull_and_radius(wrenches)
