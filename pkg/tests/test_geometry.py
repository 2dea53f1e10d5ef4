import numpy as np
import pytest

from ctrplan.geometry import (
    box_vertices,
    contact_kinematics,
    detect_contacts,
    min_distance,
    pair_distance,
    signed_distance,
)
from ctrplan.models import Box, BoxUnion, Circle, HalfPlane, UnionMember
from ctrplan.scenarios import load_scenario


class TestSignedDistance:
    def test_circle_touching_box(self):
        sd = signed_distance(Circle(0.1), (0.0, 0.0, 0.0), Box((0.1, 0.1)), (0.2, 0.0, 0.0))
        assert sd.phi == pytest.approx(0.0, abs=1e-12)
        # normal points from the box (B) toward the circle (A)
        np.testing.assert_allclose(sd.normal, [-1.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(sd.witness_a, [0.1, 0.0], atol=1e-12)

    def test_coincident_circles_tie_break(self):
        sd = signed_distance(Circle(0.1), (0.0, 0.0, 0.0), Circle(0.1), (0.0, 0.0, 0.0))
        assert sd.phi == pytest.approx(-0.2)
        np.testing.assert_allclose(sd.normal, [1.0, 0.0])

    def test_circle_above_half_plane(self):
        sd = signed_distance(Circle(0.05), (0.0, 0.08, 0.0), HalfPlane((0.0, 1.0)), (0.0, 0.0, 0.0))
        assert sd.phi == pytest.approx(0.03)
        np.testing.assert_allclose(sd.normal, [0.0, 1.0])

    def test_swapping_bodies_flips_normal(self):
        a = signed_distance(Circle(0.1), (0.0, 0.0, 0.0), Box((0.1, 0.1)), (0.25, 0.03, 0.0))
        b = signed_distance(Box((0.1, 0.1)), (0.25, 0.03, 0.0), Circle(0.1), (0.0, 0.0, 0.0))
        assert a.phi == pytest.approx(b.phi)
        np.testing.assert_allclose(a.normal, -b.normal)

    def test_phi_matches_witnesses(self):
        sd = signed_distance(Box((0.1, 0.05)), (0.0, 0.0, 0.3), Box((0.1, 0.1)), (0.35, 0.1, -0.2))
        assert sd.phi > 0.0
        assert sd.phi == pytest.approx(float(sd.normal @ (sd.witness_a - sd.witness_b)))

    def test_union_takes_closest_member(self):
        tee = BoxUnion(
            members=(
                UnionMember(Box((0.1, 0.025)), (0.0, 0.05, 0.0)),
                UnionMember(Box((0.025, 0.075)), (0.0, -0.05, 0.0)),
            )
        )
        # Pusher below the stem only sees the stem
        sd = signed_distance(tee, (0.0, 0.0, 0.0), Circle(0.02), (0.0, -0.2, 0.0))
        assert sd.phi == pytest.approx(0.2 - 0.125 - 0.02)

    def test_unsupported_pair(self):
        with pytest.raises(ValueError):
            signed_distance(HalfPlane((0.0, 1.0)), (0, 0, 0), HalfPlane((0.0, 1.0)), (0, 0, 0))

    def test_box_vertices_rotate(self):
        vertices = box_vertices(Box((0.1, 0.05)), (1.0, 0.0, np.pi / 2.0))
        np.testing.assert_allclose(vertices[0], [1.0 - 0.05, 0.1], atol=1e-12)


class TestContacts:
    def test_pusher_touching(self, pusher, pusher_touching):
        contacts = detect_contacts(pusher.system, pusher_touching)
        assert len(contacts) == 1
        assert contacts[0].phi == pytest.approx(0.0, abs=1e-12)
        assert contacts[0].cone_dim == 1

    def test_pusher_far_away(self, pusher):
        assert detect_contacts(pusher.system, np.array([10.0, 0.0])) == []

    def test_planarhand_grasp_has_one_pair_per_finger(self, planarhand):
        system = planarhand.system
        contacts = detect_contacts(system, planarhand.q0)
        pairs = [system.pairs[k.pair_index] for k in contacts]
        object_pairs = [p for p in pairs if system.is_robot_object_pair(p)]
        assert len(object_pairs) == 2

    def test_detection_matches_exhaustive_check(self, planarhand):
        system = planarhand.system
        expected = [
            i
            for i in range(len(system.pairs))
            if pair_distance(system, planarhand.q0, i).phi < system.phi_threshold
        ]
        assert [k.pair_index for k in detect_contacts(system, planarhand.q0)] == expected

    @pytest.mark.parametrize(
        "name", ["pusher1d", "boxball2d", "planarhand", "pushert", "palmsquare"]
    )
    def test_normal_row_predicts_phi(self, name):
        scenario = load_scenario(name)
        system = scenario.system
        q = scenario.q0
        rng = np.random.default_rng(3)
        for k in detect_contacts(system, q):
            direction = rng.standard_normal(system.n_q)
            direction /= np.linalg.norm(direction)
            step = 1e-6
            plus = pair_distance(system, q + step * direction, k.pair_index).phi
            minus = pair_distance(system, q - step * direction, k.pair_index).phi
            assert abs(k.J_n @ direction - (plus - minus) / (2 * step)) < 1e-5

    def test_jacobian_partition_reassembles(self, boxball):
        system = boxball.system
        (k,) = contact_kinematics(system, boxball.q0, [0])
        J = np.zeros_like(k.J)
        J[:, system.object_idx] = k.J_o(system)
        J[:, system.robot_idx] = k.J_a(system)
        np.testing.assert_array_equal(J, k.J)

    def test_anitescu_offset(self, boxball):
        (k,) = contact_kinematics(boxball.system, boxball.q0, [0])
        assert (k.J @ boxball.q0 + k.c)[0] == pytest.approx(k.phi)

    def test_deterministic(self, pushert):
        first = detect_contacts(pushert.system, pushert.q0)
        second = detect_contacts(pushert.system, pushert.q0)
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a.J, b.J)

    def test_min_distance(self, pusher):
        assert min_distance(pusher.system, pusher.q0) == pytest.approx(0.02)
