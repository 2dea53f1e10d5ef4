import numpy as np
import pytest

from ctrplan.scenarios import list_scenarios, load_scenario
from ctrplan.utils.rng import make_rng


@pytest.fixture(scope="session")
def pusher():
    return load_scenario("pusher1d")


@pytest.fixture(scope="session")
def squeeze():
    return load_scenario("squeeze1d")


@pytest.fixture(scope="session")
def boxball():
    return load_scenario("boxball2d")


@pytest.fixture(scope="session")
def planarhand():
    return load_scenario("planarhand")


@pytest.fixture(scope="session")
def pushert():
    return load_scenario("pushert")


@pytest.fixture(scope="session")
def palmsquare():
    return load_scenario("palmsquare")


@pytest.fixture
def pusher_touching():
    """Box at 0.2, ball at 0: faces touching."""
    return np.array([0.2, 0.0])


@pytest.fixture
def out_dir(tmp_path):
    path = tmp_path / "artifacts"
    path.mkdir()
    return path


@pytest.fixture
def perturbed_states():
    """Seeded (q, u) pairs scattered about a scenario's start configuration."""

    def draw(scenario, count, seed=0, spread=2e-3):
        system = scenario.system
        stream = list_scenarios().index(scenario.name)
        rng = make_rng(seed, stream)
        u0 = system.split(scenario.q0)[1]
        return [
            (
                scenario.q0 + spread * rng.standard_normal(system.n_q),
                u0 + spread * rng.standard_normal(system.n_qa),
            )
            for _ in range(count)
        ]

    return draw
