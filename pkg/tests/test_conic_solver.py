import numpy as np
import pytest

from ctrplan import conic_solver
from ctrplan.conic_solver import (
    ConeConstraint,
    ConicProgram,
    SolverStatus,
    barrier_dual,
    chebyshev_radius,
    hull_and_radius,
    in_cone,
    in_dual_cone,
    max_step,
    solve_barrier_newton,
    solve_socp,
)
from ctrplan.cqdc import assemble, step_nonsmooth, step_smoothed
from ctrplan.utils.exceptions import NumericalFailureError


def _square_halfspaces(half: float) -> np.ndarray:
    return np.array(
        [[1.0, 0.0, -half], [-1.0, 0.0, -half], [0.0, 1.0, -half], [0.0, -1.0, -half]]
    )


class TestConicProgram:
    def test_rejects_asymmetric_cost(self):
        with pytest.raises(ValueError, match="symmetric"):
            ConicProgram(P=[[1.0, 1.0], [0.0, 1.0]], b=[0.0, 0.0])

    def test_rejects_indefinite_cost(self):
        with pytest.raises(ValueError, match="semidefinite"):
            ConicProgram(P=[[1.0, 0.0], [0.0, -1.0]], b=[0.0, 0.0])

    def test_indefinite_beyond_tolerance(self):
        with pytest.raises(ValueError, match="semidefinite"):
            ConicProgram(P=np.diag([1.0, -1e-6]), b=np.zeros(2))

    def test_accepts_singular_and_roundoff_costs(self):
        ConicProgram(P=np.diag([1.0, 0.0]), b=np.zeros(2))
        ConicProgram(P=np.diag([1.0, -1e-12]), b=np.zeros(2))
        ConicProgram(P=np.zeros((3, 3)), b=np.zeros(3))

    def test_rejects_mismatched_cone(self):
        with pytest.raises(ValueError):
            ConicProgram(
                P=np.eye(2), b=np.zeros(2), cones=[ConeConstraint(A=[[1.0, 0.0, 0.0]], c=[0.0])]
            )

    def test_cone_needs_positive_mu(self):
        with pytest.raises(ValueError):
            ConeConstraint(A=np.eye(2), c=np.zeros(2), mu=0.0)


class TestBarrierNewton:
    def test_unconstrained_quadratic(self):
        program = ConicProgram(P=np.diag([2.0, 4.0]), b=[-2.0, -4.0])
        result = solve_barrier_newton(program, kappa=100.0)
        np.testing.assert_allclose(result.x, [1.0, 1.0], atol=1e-10)
        assert result.iterations <= 2
        assert result.converged

    def test_unit_cone_complementarity(self, pusher, pusher_touching):
        kappa = 100.0
        result = step_smoothed(pusher.system, pusher_touching, np.array([0.02]), kappa)
        (lam,), (v,) = result.duals, result.slacks
        assert lam[0] * v[0] == pytest.approx(1.0 / kappa, rel=1e-8)

    def test_friction_cone_complementarity(self, boxball):
        kappa = 100.0
        q = np.array([0.0, 0.0, 0.0])
        result = step_smoothed(boxball.system, q, np.array([0.02, -0.02]), kappa)
        (lam,), (v,) = result.duals, result.slacks
        assert lam @ v == pytest.approx(2.0 / kappa, rel=1e-6)
        assert in_dual_cone(lam, boxball.system.pairs[0].mu)

    def test_converges_to_socp(self, pusher, pusher_touching):
        problem = assemble(pusher.system, pusher_touching, np.array([0.02]))
        exact = solve_socp(problem.to_program()).x
        gaps = [
            np.linalg.norm(
                step_smoothed(pusher.system, pusher_touching, np.array([0.02]), k).q_next - exact
            )
            for k in (1e2, 1e4, 1e6)
        ]
        assert gaps[0] > gaps[1] > gaps[2]

    def test_trace_records_iterations(self):
        program = ConicProgram(
            P=np.eye(1), b=[1.0], cones=[ConeConstraint(A=[[1.0]], c=[0.0])]
        )
        trace = []
        solve_barrier_newton(program, kappa=1e3, trace=trace)
        assert trace
        assert {"iteration", "kappa", "gradient_norm"} <= set(trace[-1])


class TestSocp:
    def test_equality_constrained_qp(self):
        program = ConicProgram(P=np.eye(2), b=np.zeros(2), E=[[1.0, 1.0]], e=[1.0])
        solution = solve_socp(program)
        assert solution.status == SolverStatus.OPTIMAL
        np.testing.assert_allclose(solution.x, [0.5, 0.5], atol=1e-8)

    def test_bound_is_active(self):
        # min (x - 2)^2 / 2 subject to 1 - x >= 0
        program = ConicProgram(P=np.eye(1), b=[-2.0], cones=[ConeConstraint(A=[[-1.0]], c=[1.0])])
        solution = solve_socp(program)
        assert solution.optimal
        assert solution.x[0] == pytest.approx(1.0, abs=1e-6)
        assert solution.duals[0][0] == pytest.approx(1.0, abs=1e-5)
        assert solution.complementarity <= 1e-8

    def test_second_order_cone(self):
        # min x0 subject to x0 >= ||(x1 - 1)||, with x1 pinned at 3
        program = ConicProgram(
            P=np.zeros((2, 2)),
            b=[1.0, 0.0],
            cones=[ConeConstraint(A=np.eye(2), c=[0.0, -1.0], mu=1.0)],
            E=[[0.0, 1.0]],
            e=[3.0],
        )
        solution = solve_socp(program)
        assert solution.optimal
        assert solution.x[0] == pytest.approx(2.0, abs=1e-6)

    def test_infeasible(self):
        cones = [ConeConstraint(A=[[1.0]], c=[-1.0]), ConeConstraint(A=[[-1.0]], c=[0.0])]
        solution = solve_socp(ConicProgram(P=np.eye(1), b=[0.0], cones=cones))
        assert solution.status == SolverStatus.INFEASIBLE
        assert np.isnan(solution.x).all()

    def test_phase_one_failure_is_reported(self, monkeypatch, pusher, pusher_touching):
        def broken(*args, **kwargs):
            raise NumericalFailureError("singular phase I system")

        monkeypatch.setattr(conic_solver, "_find_interior", broken)
        cones = [ConeConstraint(A=[[1.0]], c=[-1.0])]
        solution = solve_socp(ConicProgram(P=np.eye(1), b=[0.0], cones=cones))
        assert solution.status == SolverStatus.NUMERICAL_FAILURE
        assert np.isnan(solution.x).all()
        with pytest.raises(NumericalFailureError):
            step_nonsmooth(pusher.system, pusher_touching, np.array([0.05]))

    def test_pull_leaves_object(self, pusher, pusher_touching):
        result = step_nonsmooth(pusher.system, pusher_touching, np.array([-0.1]))
        assert result.q_next[0] == pytest.approx(0.2, abs=1e-6)
        assert result.duals[0][0] == pytest.approx(0.0, abs=1e-6)

    def test_push_moves_object(self, pusher, pusher_touching):
        result = step_nonsmooth(pusher.system, pusher_touching, np.array([0.05]))
        assert result.q_next[0] == pytest.approx(0.25, abs=1e-3)
        assert result.q_next[1] == pytest.approx(0.05, abs=1e-3)


class TestCones:
    def test_membership(self):
        assert in_cone([1.0, 0.4], mu=2.0)
        assert not in_cone([1.0, 0.6], mu=2.0)
        # dual of mu=2 is {0.5 * l1 >= |l2|}
        assert in_dual_cone([1.0, 0.4], mu=2.0)
        assert not in_dual_cone([1.0, 0.6], mu=2.0)

    def test_barrier_dual_lies_in_dual_cone(self):
        lam = barrier_dual(np.array([1.0, 0.3]), mu=0.5, kappa=10.0)
        assert in_dual_cone(lam, 0.5)

    def test_max_step_hits_boundary(self):
        alpha = max_step(np.array([1.0, 0.0]), np.array([0.0, 1.0]), mu=1.0)
        assert alpha == pytest.approx(1.0)
        assert max_step(np.array([1.0]), np.array([1.0]), mu=1.0) == np.inf


class TestChebyshevRadius:
    def test_unit_square(self):
        assert chebyshev_radius(_square_halfspaces(0.5)) == pytest.approx(0.5)

    def test_origin_outside(self):
        assert chebyshev_radius(np.array([[1.0, 0.1]])) == 0.0

    def test_rejects_zero_normal(self):
        with pytest.raises(ValueError):
            chebyshev_radius(np.array([[0.0, 0.0, -1.0]]))

    def test_hull_of_square_corners(self):
        corners = np.array([[0.5, 0.5], [-0.5, 0.5], [-0.5, -0.5], [0.5, -0.5]])
        result = hull_and_radius(corners)
        assert not result.degenerate
        assert result.radius == pytest.approx(0.5)

    def test_matches_face_distances(self):
        rng = np.random.default_rng(11)
        points = rng.standard_normal((200, 3))
        result = hull_and_radius(points)
        brute = float(
            np.min(-result.halfspaces[:, -1] / np.linalg.norm(result.halfspaces[:, :-1], axis=1))
        )
        assert result.radius == pytest.approx(brute, rel=1e-6)

    def test_flat_cloud_is_degenerate(self):
        points = np.column_stack([np.linspace(-1.0, 1.0, 20), np.zeros(20)])
        result = hull_and_radius(points)
        assert result.degenerate
        assert result.radius == 0.0

    def test_one_dimensional(self):
        result = hull_and_radius(np.array([-0.2, 0.1, 0.3]))
        assert result.radius == pytest.approx(0.2)
