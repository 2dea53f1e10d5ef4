"""Convex solvers shared by the dynamics, sensitivity and planning layers.

Programs have the form

    min  1/2 x'Px + b'x   s.t.  Ex = e,  A_i x + c_i in K_i

with K_i = {v : v_1 >= mu_i * ||v_2:d||} (d = 1 means v_1 >= 0). The barrier
of a cone is -log(v_1^2 / mu^2 - ||v_2||^2), or -log(v_1) when d = 1.

`solve_barrier_newton` minimizes the kappa-relaxed cost with damped Newton.
`solve_socp` follows the central path of the same barrier up to kappa = theta/tol,
where theta is the total barrier degree, so the returned duality gap is <= tol.
"""
import enum
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, lstsq, null_space
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from ctrplan.config import settings
from ctrplan.utils.exceptions import InfeasibleStartError, NumericalFailureError

logger = logging.getLogger(__name__)

_ARMIJO = 1e-4
_STAGNATION = 1e-14
_PHASE_ONE_WEIGHT = 1e-6


class SolverStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITERATIONS = "max-iterations"
    NUMERICAL_FAILURE = "numerical-failure"


# Cones
@dataclass(frozen=True, eq=False)
class ConeConstraint:
    """A x + c in K_d with friction-like coefficient mu."""

    A: np.ndarray
    c: np.ndarray
    mu: float = 1.0
    label: str = ""

    def __post_init__(self) -> None:
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        c = np.asarray(self.c, dtype=float).reshape(-1)
        if A.shape[0] != c.shape[0]:
            raise ValueError(f"cone '{self.label}': A has {A.shape[0]} rows but c has {c.shape[0]}")
        if A.shape[0] >= 2 and self.mu <= 0:
            raise ValueError(f"cone '{self.label}': mu must be positive for d >= 2")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "c", c)

    @property
    def dim(self) -> int:
        return int(self.c.shape[0])

    @property
    def degree(self) -> int:
        return cone_degree(self.dim)

    def slack(self, x: np.ndarray) -> np.ndarray:
        return self.A @ x + self.c


def cone_degree(dim: int) -> int:
    return 1 if dim == 1 else 2


def dual_mu(mu: float) -> float:
    """Coefficient of the dual cone: K* = {mu * l_1 >= ||l_2||}."""
    return 1.0 / mu


def in_cone(v: np.ndarray, mu: float, tol: float = 0.0) -> bool:
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size == 1:
        return bool(v[0] >= -tol)
    return bool(v[0] >= mu * np.linalg.norm(v[1:]) - tol)


def in_dual_cone(lam: np.ndarray, mu: float, tol: float = 0.0) -> bool:
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if lam.size == 1:
        return bool(lam[0] >= -tol)
    return in_cone(lam, dual_mu(mu), tol)


def is_interior(v: np.ndarray, mu: float) -> bool:
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size == 1:
        return bool(v[0] > 0.0)
    return bool(v[0] > 0.0 and v[0] ** 2 / mu**2 - v[1:] @ v[1:] > 0.0)


def barrier_terms(v: np.ndarray, mu: float) -> Tuple[float, np.ndarray, np.ndarray]:
    """Value, gradient and Hessian of the cone barrier at slack v (value is +inf outside)."""
    v = np.asarray(v, dtype=float).reshape(-1)
    d = v.size
    if d == 1:
        if v[0] <= 0.0:
            return np.inf, np.full(1, np.nan), np.full((1, 1), np.nan)
        return -np.log(v[0]), np.array([-1.0 / v[0]]), np.array([[1.0 / v[0] ** 2]])
    s = v[0] ** 2 / mu**2 - v[1:] @ v[1:]
    if v[0] <= 0.0 or s <= 0.0:
        return np.inf, np.full(d, np.nan), np.full((d, d), np.nan)
    g = np.concatenate(([2.0 * v[0] / mu**2], -2.0 * v[1:]))
    D = np.diag(np.concatenate(([2.0 / mu**2], np.full(d - 1, -2.0))))
    return -np.log(s), -g / s, np.outer(g, g) / s**2 - D / s


def barrier_dual(v: np.ndarray, mu: float, kappa: float) -> np.ndarray:
    """Dual on the central path: lambda = -grad(barrier)(v) / kappa."""
    _, grad, _ = barrier_terms(v, mu)
    return -grad / kappa


def barrier_dual_jacobian(v: np.ndarray, mu: float, kappa: float) -> np.ndarray:
    """d lambda / d v along the central path."""
    _, _, hess = barrier_terms(v, mu)
    return -hess / kappa


def max_step(v: np.ndarray, w: np.ndarray, mu: float) -> float:
    """Largest alpha with v + alpha * w still in the cone (inf when the ray never leaves)."""
    v = np.asarray(v, dtype=float).reshape(-1)
    w = np.asarray(w, dtype=float).reshape(-1)
    if v.size == 1:
        return -v[0] / w[0] if w[0] < 0.0 else np.inf
    u0, w0 = v[0] / mu, w[0] / mu
    # (u0 + a w0)^2 - ||v2 + a w2||^2 = qa a^2 + 2 qb a + qc
    qa = w0**2 - w[1:] @ w[1:]
    qb = u0 * w0 - v[1:] @ w[1:]
    qc = u0**2 - v[1:] @ v[1:]
    roots: List[float] = []
    if abs(qa) <= 1e-14 * max(1.0, abs(qb), abs(qc)):
        if qb < 0.0:
            roots.append(-qc / (2.0 * qb))
    else:
        disc = qb**2 - qa * qc
        if disc >= 0.0:
            sq = np.sqrt(disc)
            roots.extend([(-qb - sq) / qa, (-qb + sq) / qa])
    if w0 < 0.0:
        roots.append(-u0 / w0)
    positive = [r for r in roots if r > 0.0]
    return min(positive) if positive else np.inf


def _is_psd(P: np.ndarray, tol: float = 1e-9) -> bool:
    """PSD up to tol: the Cholesky factorization of P + tol * max|P| * I succeeds."""
    shift = tol * max(1.0, float(np.abs(P).max()))
    try:
        cho_factor(P + shift * np.eye(P.shape[0]))
    except LinAlgError:
        return False
    return True


# Programs and results
@dataclass(eq=False)
class ConicProgram:
    P: np.ndarray
    b: np.ndarray
    cones: List[ConeConstraint] = field(default_factory=list)
    E: Optional[np.ndarray] = None
    e: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.P = np.atleast_2d(np.asarray(self.P, dtype=float))
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        n = self.b.shape[0]
        if self.P.shape != (n, n):
            raise ValueError(f"cost matrix must be {n}x{n}, got {self.P.shape}")
        if not np.allclose(self.P, self.P.T, atol=1e-12 * max(1.0, np.abs(self.P).max())):
            raise ValueError("cost matrix must be symmetric")
        self.P = 0.5 * (self.P + self.P.T)
        if n and not _is_psd(self.P):
            raise ValueError("cost matrix must be positive semidefinite")
        for cone in self.cones:
            if cone.A.shape[1] != n:
                raise ValueError(f"cone '{cone.label}' has {cone.A.shape[1]} columns, expected {n}")
        if (self.E is None) != (self.e is None):
            raise ValueError("equality constraints need both E and e")
        if self.E is not None:
            self.E = np.atleast_2d(np.asarray(self.E, dtype=float))
            self.e = np.asarray(self.e, dtype=float).reshape(-1)
            if self.E.shape != (self.e.shape[0], n):
                raise ValueError(
                    f"equality matrix must be {self.e.shape[0]}x{n}, got {self.E.shape}"
                )

    @property
    def n(self) -> int:
        return int(self.b.shape[0])

    @property
    def barrier_degree(self) -> int:
        return sum(cone.degree for cone in self.cones)

    def objective(self, x: np.ndarray) -> float:
        return float(0.5 * x @ self.P @ x + self.b @ x)


@dataclass(eq=False)
class BarrierSolveResult:
    x: np.ndarray
    hessian: np.ndarray
    slacks: List[np.ndarray]
    duals: List[np.ndarray]
    iterations: int
    kappa: float
    gradient_norm: float
    converged: bool


@dataclass(eq=False)
class ConicSolution:
    x: np.ndarray
    duals: List[np.ndarray]
    slacks: List[np.ndarray]
    status: SolverStatus
    iterations: int
    complementarity: float
    kappa: float = np.inf
    equality_duals: Optional[np.ndarray] = None

    @property
    def optimal(self) -> bool:
        return self.status == SolverStatus.OPTIMAL


Trace = List[Dict[str, float]]


# Reduction onto the equality-constraint nullspace
@dataclass(eq=False)
class _Reduced:
    x_p: np.ndarray
    N: np.ndarray
    P: np.ndarray
    b: np.ndarray
    cones: List[Tuple[np.ndarray, np.ndarray, float]]

    def lift(self, y: np.ndarray) -> np.ndarray:
        return self.x_p + self.N @ y

    def project(self, x: np.ndarray) -> np.ndarray:
        return self.N.T @ (x - self.x_p)


def _reduce(program: ConicProgram) -> _Reduced:
    n = program.n
    if program.E is None or program.E.shape[0] == 0:
        x_p, N = np.zeros(n), np.eye(n)
    else:
        x_p = lstsq(program.E, program.e)[0]
        residual = np.linalg.norm(program.E @ x_p - program.e)
        if residual > 1e-9 * (1.0 + np.linalg.norm(program.e)):
            raise InfeasibleStartError(
                f"equality constraints are inconsistent (residual {residual:.2e})"
            )
        N = null_space(program.E)
    P = N.T @ program.P @ N
    b = N.T @ (program.P @ x_p + program.b)
    cones = [(cone.A @ N, cone.c + cone.A @ x_p, cone.mu) for cone in program.cones]
    return _Reduced(x_p=x_p, N=N, P=0.5 * (P + P.T), b=b, cones=cones)


# Damped Newton on the barrier-augmented cost
def _objective(P, b, cones, y, kappa) -> float:
    value = 0.5 * y @ P @ y + b @ y
    for A, c, mu in cones:
        term, _, _ = barrier_terms(A @ y + c, mu)
        if not np.isfinite(term):
            return np.inf
        value += term / kappa
    return float(value)


def _derivatives(P, b, cones, y, kappa) -> Tuple[np.ndarray, np.ndarray]:
    grad = P @ y + b
    hess = P.copy()
    for A, c, mu in cones:
        _, g, H = barrier_terms(A @ y + c, mu)
        grad = grad + A.T @ g / kappa
        hess = hess + A.T @ H @ A / kappa
    return grad, 0.5 * (hess + hess.T)


def _newton_direction(hess: np.ndarray, grad: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(hess)) or not np.all(np.isfinite(grad)):
        raise NumericalFailureError("non-finite Newton system")
    try:
        return -cho_solve(cho_factor(hess), grad)
    except LinAlgError:
        pass
    # Retry with diagonal regularization
    shift = settings.CHOLESKY_REGULARIZATION * max(1.0, float(np.abs(np.diag(hess)).max()))
    try:
        return -cho_solve(cho_factor(hess + shift * np.eye(hess.shape[0])), grad)
    except LinAlgError as exc:
        raise NumericalFailureError(f"Cholesky factorization failed: {exc}") from exc


def _centering(
    P: np.ndarray,
    b: np.ndarray,
    cones: Sequence[Tuple[np.ndarray, np.ndarray, float]],
    y: np.ndarray,
    kappa: float,
    tol: float,
    max_iterations: int,
    stop: Optional[Callable[[np.ndarray], bool]] = None,
    trace: Optional[Trace] = None,
) -> Tuple[np.ndarray, int, bool, float]:
    """Minimize the barrier-augmented cost from a strictly interior y.

    Returns (y, Newton steps taken, converged, final gradient norm).
    """
    y = np.array(y, dtype=float)
    value = _objective(P, b, cones, y, kappa)
    if not np.isfinite(value):
        raise InfeasibleStartError("starting point is not strictly inside every cone")
    iterations = 0
    while True:
        grad, hess = _derivatives(P, b, cones, y, kappa)
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm <= tol:
            return y, iterations, True, grad_norm
        if iterations >= max_iterations:
            return y, iterations, False, grad_norm
        delta = _newton_direction(hess, grad)

        # Fraction to boundary
        alpha = 1.0
        for A, c, mu in cones:
            limit = max_step(A @ y + c, A @ delta, mu)
            alpha = min(alpha, settings.FRACTION_TO_BOUNDARY * limit)

        # Armijo backtracking
        slope = float(grad @ delta)
        while alpha > 1e-20:
            candidate = _objective(P, b, cones, y + alpha * delta, kappa)
            if candidate <= value + _ARMIJO * alpha * slope:
                break
            alpha *= 0.5
        else:
            logger.debug(f"Line search stalled at kappa={kappa:.3g}, |g|={grad_norm:.3e}")
            return y, iterations, True, grad_norm

        step = alpha * delta
        y = y + step
        value = candidate
        iterations += 1
        if trace is not None:
            trace.append(
                {
                    "iteration": float(len(trace)),
                    "kappa": float(kappa),
                    "gradient_norm": grad_norm,
                    "step": alpha,
                    "objective": value,
                }
            )
        if stop is not None and stop(y):
            return y, iterations, False, grad_norm
        if np.linalg.norm(step) <= _STAGNATION * (1.0 + np.linalg.norm(y)):
            # Floating-point precision limit
            return y, iterations, True, grad_norm


def _cone_shortfall(v: np.ndarray, mu: float) -> float:
    """How far the first slack component must grow to reach the cone boundary."""
    if v.size == 1:
        return float(-v[0])
    return float(mu * np.linalg.norm(v[1:]) - v[0])


def _find_interior(
    cones: Sequence[Tuple[np.ndarray, np.ndarray, float]],
    y0: np.ndarray,
    trace: Optional[Trace] = None,
) -> np.ndarray:
    """Phase I: minimize a shift s added to every cone's first slack until s < 0."""
    if all(is_interior(A @ y0 + c, mu) for A, c, mu in cones):
        return y0
    n = y0.shape[0]
    worst = max(_cone_shortfall(A @ y0 + c, mu) for A, c, mu in cones)
    s0 = worst + max(1.0, abs(worst))
    floor = max(1.0, s0)
    shifted = []
    for A, c, mu in cones:
        column = np.zeros((A.shape[0], 1))
        column[0, 0] = 1.0
        shifted.append((np.hstack([A, column]), c, mu))
    bound = np.zeros((1, n + 1))
    bound[0, -1] = 1.0
    shifted.append((bound, np.array([floor]), 1.0))

    P = np.zeros((n + 1, n + 1))
    P[:n, :n] = _PHASE_ONE_WEIGHT * np.eye(n)
    b = np.concatenate([-_PHASE_ONE_WEIGHT * y0, [1.0]])
    w = np.concatenate([y0, [s0]])

    def found(point: np.ndarray) -> bool:
        return bool(point[-1] < 0.0)

    kappa = 1.0
    while kappa <= 1e10:
        w, steps, _, _ = _centering(
            P, b, shifted, w, kappa, 1e-9, settings.NEWTON_MAX_ITERATIONS, stop=found, trace=trace
        )
        logger.debug(f"Phase I kappa={kappa:.1e}: shift={w[-1]:.3e} after {steps} steps")
        if found(w):
            return w[:n]
        kappa *= settings.BARRIER_CONTINUATION_FACTOR
    raise InfeasibleStartError(f"no strictly feasible point (smallest cone shift {w[-1]:.3e})")


def _kappa_schedule(kappa: float, start: float) -> List[float]:
    stages = [kappa]
    while stages[0] / settings.BARRIER_CONTINUATION_FACTOR >= start:
        stages.insert(0, stages[0] / settings.BARRIER_CONTINUATION_FACTOR)
    return stages


def solve_barrier_newton(
    program: ConicProgram,
    kappa: float,
    x0: Optional[np.ndarray] = None,
    tol: Optional[float] = None,
    max_iterations: Optional[int] = None,
    trace: Optional[Trace] = None,
) -> BarrierSolveResult:
    """Minimize 1/2 x'Px + b'x - kappa^-1 * sum(log barriers) by damped Newton.

    A strictly feasible x0 is used as given; otherwise phase I finds one. Large kappa
    is reached by warm-started continuation from BARRIER_INITIAL_KAPPA.
    """
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    tol = (settings.NEWTON_TOL if tol is None else tol) * (1.0 + np.linalg.norm(program.b))
    max_iterations = max_iterations or settings.NEWTON_MAX_ITERATIONS
    reduced = _reduce(program)
    y = np.zeros(reduced.N.shape[1]) if x0 is None else reduced.project(np.asarray(x0, float))
    if reduced.cones:
        y = _find_interior(reduced.cones, y, trace)

    if reduced.cones:
        stages = _kappa_schedule(kappa, min(kappa, settings.BARRIER_INITIAL_KAPPA))
    else:
        stages = [kappa]
    loose = max(tol, 1e-6 * (1.0 + np.linalg.norm(program.b)))
    iterations, converged, grad_norm = 0, False, np.inf
    for stage in stages:
        final = stage == stages[-1]
        y, steps, converged, grad_norm = _centering(
            reduced.P,
            reduced.b,
            reduced.cones,
            y,
            stage,
            tol if final else loose,
            max_iterations,
            trace=trace,
        )
        iterations += steps
    if not converged:
        logger.warning(
            f"Barrier Newton hit {max_iterations} iterations at kappa={kappa:.3g} "
            f"(|g|={grad_norm:.3e}, tol={tol:.3e})"
        )

    x = reduced.lift(y)
    slacks = [cone.slack(x) for cone in program.cones]
    hessian = program.P.copy()
    duals = []
    for cone, v in zip(program.cones, slacks):
        _, _, H = barrier_terms(v, cone.mu)
        hessian += cone.A.T @ H @ cone.A / kappa
        duals.append(barrier_dual(v, cone.mu, kappa))
    return BarrierSolveResult(
        x=x,
        hessian=0.5 * (hessian + hessian.T),
        slacks=slacks,
        duals=duals,
        iterations=iterations,
        kappa=kappa,
        gradient_norm=grad_norm,
        converged=converged,
    )


def solve_socp(
    program: ConicProgram,
    tol: Optional[float] = None,
    max_iterations: Optional[int] = None,
    x0: Optional[np.ndarray] = None,
    trace: Optional[Trace] = None,
) -> ConicSolution:
    """Solve the SOCP by barrier path following.

    Each stage centers at kappa with warm-started damped Newton, then kappa grows by
    BARRIER_CONTINUATION_FACTOR until the duality gap theta/kappa is at most tol.
    """
    tol = settings.SOCP_TOL if tol is None else tol
    max_iterations = max_iterations or settings.SOCP_MAX_ITERATIONS
    newton_tol = settings.NEWTON_TOL * (1.0 + np.linalg.norm(program.b))
    loose = max(newton_tol, 1e-6 * (1.0 + np.linalg.norm(program.b)))

    try:
        reduced = _reduce(program)
        y = np.zeros(reduced.N.shape[1]) if x0 is None else reduced.project(np.asarray(x0, float))
        if reduced.cones:
            y = _find_interior(reduced.cones, y)
    except InfeasibleStartError as exc:
        logger.debug(f"SOCP infeasible: {exc.detail}")
        return _failed_solution(program, SolverStatus.INFEASIBLE)
    except NumericalFailureError as exc:
        logger.debug(f"SOCP phase I failed numerically: {exc.detail}")
        return _failed_solution(program, SolverStatus.NUMERICAL_FAILURE)

    theta = program.barrier_degree
    kappa_final = theta / tol if theta else 1.0
    kappa = min(settings.BARRIER_INITIAL_KAPPA, kappa_final)
    iterations = 0
    status = SolverStatus.OPTIMAL
    while True:
        final = kappa >= kappa_final
        try:
            y, steps, converged, _ = _centering(
                reduced.P,
                reduced.b,
                reduced.cones,
                y,
                kappa,
                newton_tol if final else loose,
                max_iterations - iterations,
                trace=trace,
            )
        except NumericalFailureError as exc:
            logger.debug(f"SOCP numerical failure at kappa={kappa:.3g}: {exc.detail}")
            status = SolverStatus.NUMERICAL_FAILURE
            break
        iterations += steps
        if not converged and iterations >= max_iterations:
            status = SolverStatus.MAX_ITERATIONS
            break
        if final:
            break
        kappa = min(kappa * settings.BARRIER_CONTINUATION_FACTOR, kappa_final)

    x = reduced.lift(y)
    slacks = [cone.slack(x) for cone in program.cones]
    duals = [barrier_dual(v, cone.mu, kappa) for cone, v in zip(program.cones, slacks)]
    complementarity = float(sum(lam @ v for lam, v in zip(duals, slacks)))
    equality_duals = None
    if program.E is not None:
        stationarity = program.P @ x + program.b
        for cone, lam in zip(program.cones, duals):
            stationarity = stationarity - cone.A.T @ lam
        equality_duals = lstsq(program.E.T, -stationarity)[0]
    logger.debug(
        f"SOCP {status.value}: {iterations} Newton steps, "
        f"kappa={kappa:.3g}, gap={complementarity:.3e}"
    )
    return ConicSolution(
        x=x,
        duals=duals,
        slacks=slacks,
        status=status,
        iterations=iterations,
        complementarity=complementarity,
        kappa=kappa,
        equality_duals=equality_duals,
    )


def _failed_solution(program: ConicProgram, status: SolverStatus) -> ConicSolution:
    return ConicSolution(
        x=np.full(program.n, np.nan),
        duals=[np.full(cone.dim, np.nan) for cone in program.cones],
        slacks=[np.full(cone.dim, np.nan) for cone in program.cones],
        status=status,
        iterations=0,
        complementarity=np.nan,
    )


# Chebyshev radius and hulls
def chebyshev_radius(halfspaces: np.ndarray) -> float:
    """Largest ball about the origin inside {x : a_i'x + b_i <= 0}; rows are [a_i, b_i]."""
    H = np.atleast_2d(np.asarray(halfspaces, dtype=float))
    if H.shape[0] == 0:
        raise ValueError("at least one halfspace is required")
    normals, offsets = H[:, :-1], H[:, -1]
    norms = np.linalg.norm(normals, axis=1)
    if np.any(norms <= 0.0):
        raise ValueError("halfspace normals must be nonzero")
    if np.any(offsets >= 0.0):
        return 0.0
    result = linprog(
        c=np.array([-1.0]),
        A_ub=norms[:, None],
        b_ub=-offsets,
        bounds=[(0.0, None)],
        method="highs",
    )
    if result.status != 0:
        return 0.0
    return float(result.x[0])


@dataclass(eq=False)
class HullResult:
    halfspaces: np.ndarray
    radius: float
    degenerate: bool
    vertices: np.ndarray


def hull_and_radius(points: np.ndarray) -> HullResult:
    """Convex hull of a point cloud (dimension 1 to 3) and its inscribed radius about the origin."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    dim = points.shape[1]
    if dim == 1:
        lo, hi = float(points.min()), float(points.max())
        if hi - lo <= 1e-12 * max(1.0, abs(hi)):
            return HullResult(np.zeros((0, 2)), 0.0, True, points)
        halfspaces = np.array([[1.0, -hi], [-1.0, lo]])
        vertices = np.array([[lo], [hi]])
        return HullResult(halfspaces, chebyshev_radius(halfspaces), False, vertices)
    if points.shape[0] < dim + 1:
        return HullResult(np.zeros((0, dim + 1)), 0.0, True, points)
    try:
        hull = ConvexHull(points)
    except (QhullError, ValueError) as exc:
        logger.debug(f"Degenerate hull: {exc}")
        return HullResult(np.zeros((0, dim + 1)), 0.0, True, points)
    # Qhull equations are [unit normal, offset] with normal . x + offset <= 0 inside
    halfspaces = hull.equations
    return HullResult(halfspaces, chebyshev_radius(halfspaces), False, points[hull.vertices])
