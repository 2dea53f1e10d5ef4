import json
import math

import numpy as np
import pytest
from pydantic import ValidationError

from ctrplan.config import settings
from ctrplan.geometry import min_distance
from ctrplan.schemas import BodyDoc, CircleDoc, PlannerParams, SystemDoc
from ctrplan.scenarios import (
    from_document,
    list_scenarios,
    load_document,
    load_scenario,
    parse_document,
    save_document,
    two_link_ik,
)
from ctrplan.utils.exceptions import InvalidScenarioError, ScenarioNotFoundError


class TestBuiltins:
    def test_listing(self):
        assert list_scenarios() == [
            "boxball2d", "palmsquare", "planarhand", "pusher1d", "pushert", "squeeze1d"
        ]

    @pytest.mark.parametrize("name", list_scenarios())
    def test_every_builtin_loads(self, name):
        scenario = load_scenario(name)
        assert scenario.name == name
        assert scenario.q0.shape == (scenario.system.n_q,)
        assert len(scenario.content_hash) == 64

    def test_unknown_name_suggests(self):
        with pytest.raises(ScenarioNotFoundError) as exc_info:
            load_document("pusher1")
        assert "pusher1d" in exc_info.value.suggestions
        assert str(exc_info.value).startswith("[unknown-scenario]")

    def test_pusher_starts_with_a_gap(self, pusher):
        assert min_distance(pusher.system, pusher.q0) == pytest.approx(0.02)
        np.testing.assert_allclose(pusher.goal, [0.22])

    def test_palmsquare_rotation_symmetry(self, palmsquare):
        rot90 = next(s for s in palmsquare.symmetries if s.name == "rot90")
        moved = rot90.apply(palmsquare.q0)
        assert moved[0] == pytest.approx(palmsquare.q0[0] + math.pi / 2.0)
        system = palmsquare.system
        expected = min_distance(system, palmsquare.q0)
        assert min_distance(system, moved) == pytest.approx(expected, abs=1e-9)

    def test_symmetry_on_inputs(self, palmsquare):
        rot90 = next(s for s in palmsquare.symmetries if s.name == "rot90")
        u = palmsquare.system.split(palmsquare.q0)[1]
        np.testing.assert_allclose(
            rot90.apply_input(u, palmsquare.system), rot90.apply(palmsquare.q0)[1:]
        )


class TestDocuments:
    def test_round_trip_keeps_hash(self, tmp_path):
        document = load_document("boxball2d")
        path = tmp_path / "boxball2d.json"
        save_document(document, path)
        reloaded = load_document(str(path))
        assert reloaded == document
        assert reloaded.content_hash() == document.content_hash()

    def test_search_paths(self, tmp_path, monkeypatch):
        document = load_document("pusher1d").model_copy(update={"name": "custom"})
        save_document(document, tmp_path / "custom.json")
        monkeypatch.setattr(settings, "SCENARIO_PATHS", str(tmp_path))
        assert load_scenario("custom").name == "custom"

    def test_extra_field_is_rejected(self):
        payload = load_document("pusher1d").model_dump(mode="json")
        payload["color"] = "red"
        with pytest.raises(InvalidScenarioError):
            parse_document(json.dumps(payload))

    def test_malformed_json(self):
        with pytest.raises(InvalidScenarioError):
            parse_document("{", source="broken.json")

    def test_wrong_q0_length(self):
        document = load_document("pusher1d").model_copy(update={"q0": [0.0]})
        with pytest.raises(InvalidScenarioError, match="q0"):
            from_document(document)

    def test_wrong_goal_length(self):
        document = load_document("pusher1d").model_copy(update={"goal": [0.1, 0.2]})
        with pytest.raises(InvalidScenarioError, match="goal"):
            from_document(document)

    def test_negative_weights(self):
        with pytest.raises(ValidationError):
            PlannerParams(goal_weights=[-1.0], action_weights=[1.0])

    def test_duplicate_body_names(self):
        body = BodyDoc(name="ball", role="robot", geometry=CircleDoc(radius=0.1))
        with pytest.raises(ValidationError, match="unique"):
            SystemDoc(
                bodies=[body, body],
                object_indices=[],
                robot_indices=[0, 1],
                stiffness=[1.0, 1.0],
                object_mass=[],
            )


class TestTwoLinkIk:
    def test_reaches_target(self):
        t1, t2 = two_link_ik((0.0, 0.0), 1.0, 1.0, (1.0, 1.0))
        x = math.cos(t1) + math.cos(t1 + t2)
        y = math.sin(t1) + math.sin(t1 + t2)
        assert (x, y) == pytest.approx((1.0, 1.0))

    def test_out_of_reach(self):
        with pytest.raises(InvalidScenarioError):
            two_link_ik((0.0, 0.0), 1.0, 1.0, (3.0, 0.0))
