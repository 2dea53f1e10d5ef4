from dataclasses import replace

import numpy as np
import pytest

from ctrplan.conic_solver import in_cone, in_dual_cone
from ctrplan.cqdc import (
    assemble,
    classify_mode,
    mode_map,
    recover_duals,
    rollout,
    step_nonsmooth,
    step_smoothed,
    trace_header,
)
from ctrplan.models import ContactMode
from ctrplan.scenarios import list_scenarios, load_scenario


class TestAssemble:
    def test_pusher_touching_has_one_cone(self, pusher, pusher_touching):
        problem = assemble(pusher.system, pusher_touching, np.zeros(1))
        assert problem.pair_indices == [0]
        assert problem.contacts[0].phi == pytest.approx(0.0, abs=1e-12)

    def test_squeeze_has_two_cones(self, squeeze):
        problem = assemble(squeeze.system, squeeze.q0, np.array([-0.2, 0.2]))
        assert problem.pair_indices == [0, 1]

    def test_cost_blocks(self, boxball):
        system = boxball.system
        problem = assemble(system, boxball.q0, np.zeros(2))
        np.testing.assert_allclose(problem.P[0, 0], system.epsilon * 0.1 / system.h**2)
        np.testing.assert_allclose(np.diag(problem.P)[1:], system.stiffness)
        np.testing.assert_allclose(problem.P, problem.P.T)

    def test_rejects_wrong_sizes(self, pusher):
        with pytest.raises(ValueError):
            assemble(pusher.system, np.zeros(3), np.zeros(1))

    def test_no_contacts_is_unconstrained(self, pusher):
        q = np.array([10.0, 0.0])
        result = step_nonsmooth(pusher.system, q, np.array([0.3]))
        assert result.contacts == []
        assert result.q_next[0] == pytest.approx(10.0)
        assert result.q_next[1] == pytest.approx(0.3)


class TestNonsmoothStep:
    def test_force_balance(self, boxball):
        q = np.array([0.0, 0.0, 0.0])
        result = step_nonsmooth(boxball.system, q, np.array([0.02, -0.02]))
        b = result.problem.b
        assert result.force_balance_residual <= 1e-7 * (1.0 + np.linalg.norm(b))

    def test_complementary_slackness(self, pusher, pusher_touching):
        result = step_nonsmooth(pusher.system, pusher_touching, np.array([0.03]))
        (lam,), (v,) = result.duals, result.slacks
        assert abs(lam @ v) <= 1e-7
        assert lam[0] > 0.0

    def test_translation_equivariance(self, pusher, pusher_touching):
        shift = 0.37
        base = step_nonsmooth(pusher.system, pusher_touching, np.array([0.03]))
        moved = step_nonsmooth(pusher.system, pusher_touching + shift, np.array([0.03 + shift]))
        np.testing.assert_allclose(moved.q_next, base.q_next + shift, atol=1e-6)

    def test_quasistatic_consistency(self, pusher):
        system = pusher.system
        pushed = replace(system, tau_object=np.array([0.5]))
        q = np.array([10.0, 0.0])
        result = step_nonsmooth(pushed, q, np.zeros(1))
        expected = q[0] + system.h**2 * 0.5 / (system.epsilon * system.object_mass[0, 0])
        assert result.q_next[0] == pytest.approx(expected)


class TestSmoothedStep:
    def test_force_from_a_distance(self, pusher, pusher_touching):
        result = step_smoothed(pusher.system, pusher_touching, np.zeros(1), kappa=100.0)
        assert result.q_next[0] > 0.2
        assert result.duals[0][0] > 0.0

    @pytest.mark.parametrize("name", ["pusher1d", "squeeze1d", "boxball2d"])
    def test_large_kappa_matches_nonsmooth(self, name):
        scenario = load_scenario(name)
        u = scenario.system.split(scenario.q0)[1] + 0.01
        exact = step_nonsmooth(scenario.system, scenario.q0, u).q_next
        smooth = step_smoothed(scenario.system, scenario.q0, u, kappa=1e7).q_next
        np.testing.assert_allclose(smooth, exact, atol=1e-4)

    def test_recovered_duals_match(self, boxball):
        q = np.array([0.0, 0.0, 0.0])
        result = step_smoothed(boxball.system, q, np.array([0.02, -0.02]), kappa=100.0)
        recovered = recover_duals(result.problem, result.q_next, 100.0)
        for a, b in zip(recovered, result.duals):
            np.testing.assert_array_equal(a, b)


class TestModes:
    def test_pull_is_separation(self, pusher, pusher_touching):
        result = step_nonsmooth(pusher.system, pusher_touching, np.array([-0.1]))
        assert classify_mode(result) == [ContactMode.SEPARATION]

    def test_frictionless_push_is_sticking(self, pusher, pusher_touching):
        result = step_nonsmooth(pusher.system, pusher_touching, np.array([0.05]))
        assert classify_mode(result) == [ContactMode.STICKING]

    def test_boxball_press_and_drag_sticks(self, boxball):
        q = np.array([0.0, 0.0, 0.0])
        result = step_nonsmooth(boxball.system, q, np.array([0.01, -0.05]))
        (lam,) = result.duals
        assert classify_mode(result) == [ContactMode.STICKING]
        assert abs(lam[1]) < 0.5 * lam[0]
        assert result.q_next[0] > 0.0

    def test_boxball_light_touch_slides(self, boxball):
        q = np.array([0.0, 0.0, 0.0])
        result = step_nonsmooth(boxball.system, q, np.array([0.1, -0.002]))
        (lam,) = result.duals
        (mode,) = classify_mode(result)
        assert mode in (ContactMode.SLIDING_POS, ContactMode.SLIDING_NEG)
        assert abs(lam[1]) == pytest.approx(0.5 * lam[0], rel=1e-4)

    def test_mode_map_covers_grid(self, pusher, pusher_touching):
        grid = [np.array([u]) for u in (-0.05, 0.0, 0.05)]
        entries = mode_map(pusher.system, pusher_touching, grid, kappa=100.0)
        assert len(entries) == 3
        assert entries[0].modes[0] == ContactMode.SEPARATION
        assert entries[2].modes[0] == ContactMode.STICKING
        assert entries[2].q_next_smoothed is not None


class TestRollout:
    def test_rollout_is_consistent(self, pusher, pusher_touching):
        inputs = [np.array([0.01]), np.array([0.02]), np.array([0.03])]
        trajectory = rollout(pusher.system, pusher_touching, inputs)
        assert trajectory.horizon == 3
        for t, u in enumerate(inputs):
            expected = step_nonsmooth(pusher.system, trajectory.configurations[t], u).q_next
            np.testing.assert_allclose(trajectory.configurations[t + 1], expected, atol=1e-9)

    def test_trace_rows_match_header(self, pusher, pusher_touching):
        trajectory = rollout(pusher.system, pusher_touching, [np.array([0.01])])
        header = trace_header(pusher.system)
        assert header == ["t", "q0", "q1", "u0", "lambda_n0"]
        assert all(len(row) == len(header) for row in trajectory.rows(len(pusher.system.pairs)))


@pytest.mark.slow
@pytest.mark.parametrize("name", list_scenarios())
class TestOptimalityConditions:
    def test_nonsmooth_kkt(self, name, perturbed_states):
        scenario = load_scenario(name)
        for q, u in perturbed_states(scenario, 100):
            result = step_nonsmooth(scenario.system, q, u)
            scale = 1.0 + np.linalg.norm(result.problem.b)
            assert result.force_balance_residual <= 1e-7 * scale
            for k, lam, v in zip(result.contacts, result.duals, result.slacks):
                mu = k.mu if k.cone_dim > 1 else 1.0
                assert in_cone(v, mu, tol=1e-7)
                assert in_dual_cone(lam, mu, tol=1e-7)
                assert abs(lam @ v) <= 1e-7

    @pytest.mark.parametrize("kappa", [1e2, 1e4])
    def test_smoothed_central_path(self, name, kappa, perturbed_states):
        scenario = load_scenario(name)
        for q, u in perturbed_states(scenario, 10, seed=1):
            result = step_smoothed(scenario.system, q, u, kappa)
            for k, lam, v in zip(result.contacts, result.duals, result.slacks):
                expected = (1.0 if k.cone_dim == 1 else 2.0) / kappa
                assert lam @ v == pytest.approx(expected, rel=1e-6)
