import numpy as np
import pytest

from ctrplan.scenarios import list_scenarios, load_scenario
from ctrplan.sensitivity import linearize
from ctrplan.trust_region import (
    TrustRegionSpec,
    TrustRegionVariant,
    build,
    contains,
    contains_batch,
    motion_set_from_wrench,
    motion_set_samples,
    sample,
    sample_ellipsoid,
    wrench_hull,
    wrench_set_samples,
)
from ctrplan.utils.exceptions import DegenerateRegionError
from ctrplan.utils.rng import make_rng

V = TrustRegionVariant


def _regions(lin, variants, radius=0.05, kappa=100.0, **kwargs):
    return {
        v: build(TrustRegionSpec(variant=v, radius=radius, kappa=kappa, **kwargs), lin)
        for v in variants
    }


@pytest.fixture(scope="module")
def boxball_lin():
    scenario = load_scenario("boxball2d")
    return linearize(
        scenario.system, np.zeros(3), np.array([0.0, -0.01]), 100.0, mode="frozen-geometry"
    )


class TestSpec:
    def test_variant_flags(self):
        assert V.RA_CTR.action_only and V.RA_CTR.dual and not V.RA_CTR.primal
        assert V.CTR.primal and V.CTR.dual and not V.CTR.action_only
        assert not V.ETR.primal and not V.ETR.dual

    def test_rejects_bad_radius(self):
        with pytest.raises(ValueError):
            TrustRegionSpec(radius=0.0)

    def test_rejects_indefinite_sigma(self):
        with pytest.raises(ValueError):
            TrustRegionSpec(sigma=np.diag([1.0, -1.0]))

    def test_scaled(self):
        spec = TrustRegionSpec(radius=0.05).scaled(4.0)
        assert spec.radius == pytest.approx(0.2)
        np.testing.assert_allclose(spec.sigma_matrix(2), np.eye(2) / 0.04)


class TestBuild:
    def test_etr_is_ellipsoid_only(self, boxball_lin):
        region = build(TrustRegionSpec(variant=V.ETR, use_joint_limits=False), boxball_lin)
        assert region.cones == [region.ellipsoid]

    def test_constraint_counts(self, boxball_lin):
        regions = _regions(boxball_lin, [V.CTR, V.R_CTR, V.A_CTR, V.RA_CTR])
        assert len(regions[V.CTR].primal) == 1 and len(regions[V.CTR].dual) == 1
        assert regions[V.R_CTR].primal == [] and len(regions[V.R_CTR].dual) == 1
        assert regions[V.A_CTR].dim == 2
        assert regions[V.CTR].dim == 5

    def test_joint_limits_become_bounds(self, pusher, pusher_touching):
        lin = linearize(
            pusher.system, pusher_touching, np.zeros(1), 100.0, with_configuration=False
        )
        region = build(TrustRegionSpec(variant=V.A_ETR, radius=2.0), lin)
        assert len(region.limits) == 2
        assert contains(region, np.array([0.9]))
        assert not contains(region, np.array([1.1]))

    def test_split(self, boxball_lin):
        region = build(TrustRegionSpec(variant=V.CTR), boxball_lin)
        dq, du = region.split(np.arange(5.0))
        np.testing.assert_array_equal(dq, [0.0, 1.0, 2.0])
        np.testing.assert_array_equal(du, [3.0, 4.0])


class TestInclusion:
    def test_full_chain(self, boxball_lin):
        regions = _regions(boxball_lin, [V.CTR, V.R_CTR, V.ETR])
        proposals = sample_ellipsoid(regions[V.ETR].factor, 10_000, np.random.default_rng(0))
        ctr = contains_batch(regions[V.CTR], proposals)
        rctr = contains_batch(regions[V.R_CTR], proposals)
        etr = contains_batch(regions[V.ETR], proposals)
        assert np.all(~ctr | rctr)
        assert np.all(~rctr | etr)

    def test_action_chain(self, boxball_lin):
        regions = _regions(boxball_lin, [V.A_CTR, V.RA_CTR, V.A_ETR])
        proposals = sample_ellipsoid(regions[V.A_ETR].factor, 10_000, np.random.default_rng(1))
        actr = contains_batch(regions[V.A_CTR], proposals)
        ractr = contains_batch(regions[V.RA_CTR], proposals)
        etr = contains_batch(regions[V.A_ETR], proposals)
        assert np.all(~actr | ractr)
        assert np.all(~ractr | etr)

    @pytest.mark.slow
    @pytest.mark.parametrize("name", list_scenarios())
    def test_chain_on_every_scenario(self, name):
        scenario = load_scenario(name)
        system = scenario.system
        u = system.split(scenario.q0)[1]
        lin = linearize(system, scenario.q0, u, 100.0, mode="frozen-geometry")
        regions = _regions(lin, [V.CTR, V.R_CTR, V.ETR])
        proposals = sample_ellipsoid(regions[V.ETR].factor, 10_000, make_rng(0, 5))
        ctr = contains_batch(regions[V.CTR], proposals)
        rctr = contains_batch(regions[V.R_CTR], proposals)
        etr = contains_batch(regions[V.ETR], proposals)
        assert np.all(~ctr | rctr)
        assert np.all(~rctr | etr)

    def test_midpoints_stay_inside(self, boxball_lin):
        region = build(TrustRegionSpec(variant=V.RA_CTR), boxball_lin)
        samples = sample(region, 1000, seed=2).samples
        rng = np.random.default_rng(3)
        i, j = rng.integers(0, len(samples), (2, 1000))
        assert contains_batch(region, 0.5 * (samples[i] + samples[j]), tol=1e-12).all()

    def test_larger_radius_keeps_samples(self, boxball_lin):
        spec = TrustRegionSpec(variant=V.RA_CTR, radius=0.05)
        samples = sample(build(spec, boxball_lin), 500, seed=4).samples
        larger = build(spec.scaled(2.0), boxball_lin)
        assert contains_batch(larger, samples, tol=1e-12).all()


class TestSampling:
    def test_etr_accepts_everything(self, boxball_lin):
        region = build(TrustRegionSpec(variant=V.A_ETR, radius=0.05), boxball_lin)
        drawn = sample(region, 2000, seed=0)
        assert drawn.samples.shape == (2000, 2)
        assert drawn.acceptance_rate == 1.0
        assert np.linalg.norm(drawn.samples, axis=1).max() <= 0.05 + 1e-12

    def test_deterministic(self, boxball_lin):
        region = build(TrustRegionSpec(variant=V.RA_CTR), boxball_lin)
        np.testing.assert_array_equal(
            sample(region, 300, seed=9).samples, sample(region, 300, seed=9).samples
        )

    def test_pusher_pull_is_cut(self, pusher, pusher_touching):
        lin = linearize(pusher.system, pusher_touching, np.zeros(1), 1e4, with_configuration=False)
        region = build(TrustRegionSpec(variant=V.RA_CTR, radius=0.05, kappa=1e4), lin)
        du = sample(region, 2000, seed=0).samples[:, 0]
        assert (du < -0.021).sum() == 0
        # smoothing still admits a small pull
        assert (du < 0.0).any()

    def test_squeeze_deep_contact_keeps_ellipsoid(self, squeeze):
        u = np.array([-0.16, 0.16])
        lin = linearize(
            squeeze.system, np.array([0.0, -0.16, 0.16]), u, 100.0, with_configuration=False
        )
        region = build(TrustRegionSpec(variant=V.RA_CTR, radius=0.05), lin)
        assert sample(region, 1000, seed=0).acceptance_rate == 1.0

    def test_squeeze_shallow_contact_rejects(self, squeeze):
        u = np.array([-0.19, 0.19])
        lin = linearize(
            squeeze.system, np.array([0.0, -0.19, 0.19]), u, 100.0, with_configuration=False
        )
        region = build(TrustRegionSpec(variant=V.RA_CTR, radius=0.05), lin)
        assert sample(region, 1000, seed=0).acceptance_rate < 1.0

    def test_empty_region_is_degenerate(self, pusher):
        lin = linearize(
            pusher.system, np.array([10.0, 0.0]), np.array([2.0]), 100.0, with_configuration=False
        )
        region = build(TrustRegionSpec(variant=V.A_ETR, radius=0.05), lin)
        with pytest.raises(DegenerateRegionError):
            sample(region, 10, seed=0)

    def test_rejects_nonpositive_count(self, boxball_lin):
        with pytest.raises(ValueError):
            sample(build(TrustRegionSpec(variant=V.A_ETR), boxball_lin), 0, seed=0)


class TestMotionSets:
    def test_zero_perturbation_is_nominal(self, boxball_lin):
        region = build(TrustRegionSpec(variant=V.CTR), boxball_lin)
        np.testing.assert_allclose(motion_set_samples(region, np.zeros((1, 5)))[0], boxball_lin.f)

    @pytest.mark.parametrize("name", ["planarhand", "pushert"])
    def test_wrench_route_matches_image(self, name):
        scenario = load_scenario(name)
        system = scenario.system
        u = system.split(scenario.q0)[1]
        lin = linearize(system, scenario.q0, u, 100.0, with_configuration=False)
        region = build(TrustRegionSpec(variant=V.RA_CTR, radius=0.1), lin)
        samples = sample(region, 1000, seed=5).samples
        image = motion_set_samples(region, samples, object_only=True)
        wrenches = wrench_set_samples(lin, samples)
        via_wrench = motion_set_from_wrench(system, scenario.q0, wrenches.total)
        np.testing.assert_allclose(via_wrench, image, atol=1e-8)

    def test_no_contacts_wrench_set_is_tau(self, pusher):
        lin = linearize(
            pusher.system, np.array([10.0, 0.0]), np.zeros(1), 100.0, with_configuration=False
        )
        wrenches = wrench_set_samples(lin, np.array([[0.01], [-0.02]]))
        np.testing.assert_allclose(wrenches.total, np.zeros((2, 1)))
        moved = motion_set_from_wrench(pusher.system, np.array([10.0, 0.0]), wrenches.total)
        np.testing.assert_allclose(moved, [[10.0], [10.0]])

    def test_antipodal_grasp_spans_squeeze_axis(self, planarhand):
        system = planarhand.system
        u = system.split(planarhand.q0)[1]
        lin = linearize(system, planarhand.q0, u, 100.0, with_configuration=False)
        region = build(TrustRegionSpec(variant=V.RA_CTR, radius=0.1), lin)
        wrenches = wrench_set_samples(lin, sample(region, 500, seed=6).samples)
        assert wrenches.total[:, 0].min() < 0.0 < wrenches.total[:, 0].max()
        assert wrench_hull(wrenches.total).radius > 0.0
