import numpy as np
import pytest

from ctrplan.cqdc import recover_duals
from ctrplan.scenarios import list_scenarios, load_scenario
from ctrplan.sensitivity import (
    finite_difference_u,
    gradient_check,
    linearize,
    taylor_residual,
)
from ctrplan.utils.rng import make_rng

KAPPA = 100.0


class TestLinearize:
    def test_separated_pusher(self, pusher):
        lin = linearize(pusher.system, np.array([10.0, 0.0]), np.zeros(1), KAPPA)
        np.testing.assert_allclose(lin.B[:, 0], [0.0, 1.0], atol=1e-12)
        np.testing.assert_allclose(lin.A, np.diag([1.0, 0.0]), atol=1e-6)
        assert lin.contacts == []

    def test_in_contact_object_gain(self, pusher, pusher_touching):
        lin = linearize(
            pusher.system, pusher_touching, np.zeros(1), KAPPA, with_configuration=False
        )
        assert 0.0 < lin.B[0, 0] < 1.0
        assert lin.A is None
        assert not lin.has_configuration_gradients

    def test_nominal_duals_match_recovery(self, boxball):
        q = np.array([0.0, 0.0, 0.0])
        lin = linearize(boxball.system, q, np.array([0.02, -0.02]), KAPPA, with_configuration=False)
        problem = lin.nominal.problem
        for lam, recovered in zip(lin.duals, recover_duals(problem, lin.f, KAPPA)):
            np.testing.assert_array_equal(lam, recovered)
        assert lin.duals_interior

    def test_shapes(self, planarhand):
        system = planarhand.system
        u = system.split(planarhand.q0)[1]
        lin = linearize(system, planarhand.q0, u, KAPPA, mode="frozen-geometry")
        assert lin.A.shape == (system.n_q, system.n_q)
        assert lin.B.shape == (system.n_q, system.n_qa)
        for k, C_i, D_i in zip(lin.contacts, lin.C, lin.D):
            assert C_i.shape == (k.cone_dim, system.n_q)
            assert D_i.shape == (k.cone_dim, system.n_qa)
        assert lin.mode == "frozen-geometry"

    def test_predict_needs_configuration_gradients(self, pusher, pusher_touching):
        lin = linearize(
            pusher.system, pusher_touching, np.zeros(1), KAPPA, with_configuration=False
        )
        with pytest.raises(ValueError):
            lin.predict(np.array([0.01, 0.0]), np.zeros(1))

    def test_rejects_unknown_mode(self, pusher, pusher_touching):
        with pytest.raises(ValueError):
            linearize(pusher.system, pusher_touching, np.zeros(1), KAPPA, mode="spline")


class TestGradients:
    @pytest.mark.parametrize("kappa", [1e2, 1e4])
    def test_pusher_input_gradients(self, pusher, pusher_touching, kappa):
        entries = gradient_check(pusher.system, pusher_touching, np.array([0.01]), kappa)
        worst = max(e.relative_error for e in entries if e.block[0] in "BD")
        assert worst <= 1e-4

    def test_boxball_input_gradients(self, boxball):
        q = np.array([0.0, 0.0, 0.0])
        entries = gradient_check(boxball.system, q, np.array([0.02, -0.02]), KAPPA)
        worst = max(e.relative_error for e in entries if e.block[0] in "BD")
        assert worst <= 1e-4

    def test_dual_gradient_matches_differences(self, squeeze):
        q = np.array([0.0, -0.19, 0.19])
        u = np.array([-0.18, 0.18])
        lin = linearize(squeeze.system, q, u, KAPPA, with_configuration=False)
        B_fd, D_fd = finite_difference_u(squeeze.system, q, u, KAPPA, lin.pair_indices)
        np.testing.assert_allclose(lin.B, B_fd, rtol=1e-4, atol=1e-7)
        for D_i, D_num in zip(lin.D, D_fd):
            np.testing.assert_allclose(D_i, D_num, rtol=1e-4, atol=1e-6)

    def test_modes_agree_on_flat_face(self, boxball):
        q = np.array([0.0, 0.0, 0.0])
        u = np.array([0.02, -0.02])
        frozen = linearize(boxball.system, q, u, KAPPA, mode="frozen-geometry")
        exact = linearize(boxball.system, q, u, KAPPA, mode="finite-difference")
        scale = np.abs(exact.A).max()
        assert np.abs(frozen.A - exact.A).max() <= 0.05 * scale


class TestTaylorResidual:
    def test_zero_perturbation(self, pusher, pusher_touching):
        lin = linearize(
            pusher.system, pusher_touching, np.zeros(1), KAPPA, with_configuration=False
        )
        assert taylor_residual(lin, np.zeros(2), np.zeros(1)) <= 1e-8

    def test_quadratic_decay(self, pusher, pusher_touching):
        lin = linearize(
            pusher.system, pusher_touching, np.zeros(1), KAPPA, with_configuration=False
        )
        full = taylor_residual(lin, np.zeros(2), np.array([2e-3]))
        half = taylor_residual(lin, np.zeros(2), np.array([1e-3]))
        assert 1.0 / 8.0 <= half / full <= 1.0 / 2.0

    def test_monotone_in_step(self, pusher, pusher_touching):
        lin = linearize(
            pusher.system, pusher_touching, np.zeros(1), KAPPA, with_configuration=False
        )
        small = taylor_residual(lin, np.zeros(2), np.array([0.01]))
        large = taylor_residual(lin, np.zeros(2), np.array([0.02]))
        assert 0.0 < small < large


@pytest.mark.slow
@pytest.mark.parametrize("name", list_scenarios())
class TestScenarioSuites:
    @pytest.mark.parametrize("kappa", [1e2, 1e4])
    def test_input_gradients(self, name, kappa, perturbed_states):
        scenario = load_scenario(name)
        start = (scenario.q0, scenario.system.split(scenario.q0)[1])
        for q, u in [start, *perturbed_states(scenario, 2)]:
            entries = gradient_check(scenario.system, q, u, kappa)
            worst = max((e.relative_error for e in entries if e.block[0] in "BD"), default=0.0)
            assert worst <= 1e-4

    def test_residual_decays_quadratically(self, name):
        scenario = load_scenario(name)
        system = scenario.system
        lin = linearize(
            system, scenario.q0, system.split(scenario.q0)[1], KAPPA, with_configuration=False
        )
        dq = np.zeros(system.n_q)
        for i in range(10):
            direction = make_rng(0, i).standard_normal(system.n_qa)
            du = 2e-3 * direction / np.linalg.norm(direction)
            full = taylor_residual(lin, dq, du)
            half = taylor_residual(lin, dq, 0.5 * du)
            assert 1.0 / 8.0 <= half / full <= 1.0 / 2.0
