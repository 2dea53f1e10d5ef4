import argparse
import logging
from typing import List

import numpy as np

from ctrplan.commands.common import (
    add_scenario_arguments,
    load,
    object_columns,
    open_store,
    robot_columns,
    variant_list,
)
from ctrplan.cqdc import mode_map
from ctrplan.sensitivity import linearize
from ctrplan.services.artifact_service import scatter_figure
from ctrplan.trust_region import (
    TrustRegionSpec,
    TrustRegionVariant,
    build,
    motion_set_from_wrench,
    motion_set_samples,
    sample,
    wrench_hull,
    wrench_set_samples,
)

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    region = subparsers.add_parser(
        "trust-region", help="sample trust regions at the scenario start"
    )
    add_scenario_arguments(region)
    region.add_argument(
        "--variant",
        dest="variants",
        type=variant_list,
        default=["ra-ctr"],
        help="comma-separated variants",
    )
    region.add_argument("--r", type=float, default=None)
    region.add_argument("--kappa", type=float, default=None)
    region.add_argument("--n", type=int, default=1000, help="samples per variant")
    region.add_argument(
        "--mode-map", action="store_true", help="also classify contact modes over a command grid"
    )
    region.add_argument("--span", type=float, default=0.1, help="half-width of the mode-map grid")
    region.add_argument("--grid", type=int, default=21, help="mode-map points per axis")
    region.set_defaults(handler=run_trust_region)

    motion = subparsers.add_parser(
        "motion-set", help="object motion sets via the image and wrench routes"
    )
    add_scenario_arguments(motion)
    motion.add_argument("--variant", dest="variants", type=variant_list, default=["ra-ctr"])
    motion.add_argument("--r", type=float, default=None)
    motion.add_argument("--kappa", type=float, default=None)
    motion.add_argument("--n", type=int, default=1000)
    motion.set_defaults(handler=run_motion_set)


def _spec(args: argparse.Namespace, scenario, variant: str) -> TrustRegionSpec:
    tr = scenario.params.trust_region
    return TrustRegionSpec(
        variant=TrustRegionVariant(variant),
        radius=args.r if args.r is not None else tr.radius,
        kappa=args.kappa if args.kappa is not None else tr.kappa,
    )


def run_trust_region(args: argparse.Namespace) -> int:
    """
    Sample every requested trust-region variant at (q0, q0^a).

    trust_region.csv holds one row per accepted sample; mode_map.csv the
    contact modes of the exact dynamics over a grid of commands.
    """
    scenario = load(args)
    system = scenario.system
    q0, u0 = scenario.q0, system.split(scenario.q0)[1]
    store = open_store(args, scenario, "trust-region")

    header = [
        "variant",
        *[f"dq{i}" for i in range(system.n_q)],
        *[f"du{i}" for i in range(system.n_qa)],
    ]
    rows, groups = [], []
    for variant in args.variants:
        spec = _spec(args, scenario, variant)
        lin = linearize(system, q0, u0, spec.kappa, with_configuration=not spec.variant.action_only)
        region = build(spec, lin)
        drawn = sample(region, args.n, args.seed)
        dq, du = region.split(drawn.samples)
        rows += [[variant, *a, *b] for a, b in zip(dq, du)]
        groups.append(du[:, :2])
        logger.info(f"{variant}: acceptance rate {drawn.acceptance_rate:.3f}")
    store.write_csv("trust_region.csv", header, rows)
    if args.svg:
        title = f"{scenario.name} trust regions"
        store.write_svg(
            "trust_region.svg", scatter_figure(groups, args.variants, ("du0", "du1"), title=title)
        )

    if args.mode_map:
        axes = [
            np.linspace(u0[i] - args.span, u0[i] + args.span, args.grid)
            for i in range(min(2, system.n_qa))
        ]
        grid: List[np.ndarray] = []
        for point in np.array(np.meshgrid(*axes, indexing="ij")).reshape(len(axes), -1).T:
            u = u0.copy()
            u[: len(point)] = point
            grid.append(u)
        kappa = args.kappa if args.kappa is not None else scenario.params.trust_region.kappa
        entries = mode_map(system, q0, grid, kappa=kappa)
        pair_columns = [f"mode{i}" for i in range(len(system.pairs))]
        map_rows = []
        for entry in entries:
            modes = [
                entry.modes[i].value if i in entry.modes else "" for i in range(len(system.pairs))
            ]
            exact = system.split(entry.q_next)[0]
            smoothed = system.split(entry.q_next_smoothed)[0]
            map_rows.append([*entry.u, *modes, *exact, *smoothed])
        header = [
            *robot_columns(scenario),
            *pair_columns,
            *object_columns(scenario),
            *object_columns(scenario, "qo_smooth"),
        ]
        store.write_csv("mode_map.csv", header, map_rows)

    store.finalize()
    return 0


def run_motion_set(args: argparse.Namespace) -> int:
    """
    Object motion sets of each variant.

    Action-only variants are also pushed through the wrench route; the two
    routes must agree sample by sample.
    """
    scenario = load(args)
    system = scenario.system
    q0, u0 = scenario.q0, system.split(scenario.q0)[1]
    store = open_store(args, scenario, "motion-set")

    rows, groups, labels, summary = [], [], [], []
    for variant in args.variants:
        spec = _spec(args, scenario, variant)
        lin = linearize(system, q0, u0, spec.kappa, with_configuration=not spec.variant.action_only)
        region = build(spec, lin)
        drawn = sample(region, args.n, args.seed)
        image = motion_set_samples(region, drawn.samples, object_only=True)
        rows += [[variant, "image", *p] for p in image]
        groups.append(image)
        labels.append(variant)

        disagreement, radius = np.nan, np.nan
        if spec.variant.action_only:
            wrenches = wrench_set_samples(lin, drawn.samples)
            via_wrench = motion_set_from_wrench(system, q0, wrenches.total)
            rows += [[variant, "wrench", *p] for p in via_wrench]
            disagreement = float(np.abs(via_wrench - image).max(initial=0.0))
            radius = wrench_hull(wrenches.total).radius
            logger.info(f"{variant}: wrench and image routes differ by at most {disagreement:.2e}")
        summary.append([variant, drawn.acceptance_rate, disagreement, radius])

    store.write_csv("motion_set.csv", ["variant", "route", *object_columns(scenario)], rows)
    store.write_csv(
        "motion_set_summary.csv",
        ["variant", "acceptance_rate", "route_disagreement", "wrench_radius"],
        summary,
    )
    if args.svg:
        title = f"{scenario.name} motion sets"
        figure = scatter_figure(groups, labels, ("qo0", "qo1"), title=title)
        store.write_svg("motion_set.svg", figure)
    store.finalize()
    return 0
