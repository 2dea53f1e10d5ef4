import argparse
import logging

import numpy as np

from ctrplan.commands.common import (
    add_planner_arguments,
    add_scenario_arguments,
    float_list,
    goal_of,
    load,
    open_store,
)
from ctrplan.cqdc import trace_header
from ctrplan.services.artifact_service import graph_figure, heatmap_figure
from ctrplan.services.grasp_service import grasp_service
from ctrplan.services.roadmap_service import roadmap_service
from ctrplan.utils.exceptions import InvalidScenarioError

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    grasp = subparsers.add_parser(
        "grasp", help="sample and score contact configurations for a goal"
    )
    add_scenario_arguments(grasp)
    add_planner_arguments(grasp)
    grasp.add_argument("--n", type=int, default=None, help="samples (default: scenario)")
    grasp.add_argument(
        "--alpha", type=float, default=None, help="robustness weight (default: scenario)"
    )
    grasp.add_argument(
        "--base", action="store_true", help="score the scenario's declared grasps instead"
    )
    grasp.add_argument(
        "--landscape", action="store_true", help="value function over robot placements"
    )
    grasp.add_argument("--span", type=float, default=0.15)
    grasp.add_argument("--grid", type=int, default=11)
    grasp.set_defaults(handler=run_grasp)

    roadmap = subparsers.add_parser("roadmap", help="build, walk and query a contact roadmap")
    add_scenario_arguments(roadmap)
    add_planner_arguments(roadmap)
    roadmap.add_argument("--load", type=str, default=None, help="reuse a saved roadmap.json")
    roadmap.add_argument("--walk", type=int, default=0, help="random-walk edge replays")
    roadmap.add_argument(
        "--query", type=float_list, default=None, help="object goal to reach through the roadmap"
    )
    roadmap.set_defaults(handler=run_roadmap)


def run_grasp(args: argparse.Namespace) -> int:
    scenario = load(args)
    system, params = scenario.system, scenario.params
    goal = goal_of(args, scenario)
    q_object = system.split(scenario.q0)[0]
    alpha = args.alpha if args.alpha is not None else scenario.grasp.alpha
    store = open_store(args, scenario, "grasp")
    header = [
        "sample",
        *[f"qa{i}" for i in range(system.n_qa)],
        "value",
        "radius",
        "cost",
        "feasible",
        "infeasible_rollout",
    ]

    def row(c):
        return [
            c.sample_index, *c.q_robot, c.value, c.radius, c.cost, c.feasible, c.infeasible_rollout
        ]

    if args.base:
        if not scenario.base_grasps:
            raise InvalidScenarioError(f"scenario '{scenario.name}' declares no grasps")
        candidates = [
            grasp_service.score(
                system, system.split(q)[1], system.split(q)[0], goal, params, alpha,
                scenario.grasp.hull_samples, args.seed, sample_index=i,
            )
            for i, q in enumerate(scenario.base_grasps)
        ]
        for c in candidates:
            logger.info(
                f"Grasp {c.sample_index}: V={c.value:.3e}, r={c.radius:.3e}, C={c.cost:.3e}"
            )
        store.write_csv("base_grasps.csv", header, [row(c) for c in candidates])
    else:
        n = args.n or scenario.grasp.samples
        search = grasp_service.sample_grasps(
            system, q_object, goal, n, alpha, args.seed, params, scenario.grasp.hull_samples
        )
        logger.info(f"{search.feasible_count}/{n} feasible samples")
        store.write_csv("grasps.csv", header, [row(c) for c in search.candidates])
        store.write_csv("best.csv", header, [row(search.best)])

    if args.landscape:
        u0 = system.split(scenario.q0)[1]
        xs = np.linspace(u0[0] - args.span, u0[0] + args.span, args.grid)
        ys = np.zeros(1)
        if system.n_qa > 1:
            ys = np.linspace(u0[1] - args.span, u0[1] + args.span, args.grid)
        grid = []
        for x in xs:
            for y in ys:
                q_robot = u0.copy()
                q_robot[0] = x
                if system.n_qa > 1:
                    q_robot[1] = y
                grid.append(q_robot)
        points = grasp_service.value_landscape(system, q_object, goal, grid, params)
        store.write_csv(
            "landscape.csv",
            [*[f"qa{i}" for i in range(system.n_qa)], "value", "penetrating", "infeasible"],
            [[*p.q_robot, p.value, p.penetrating, p.infeasible] for p in points],
        )
        if args.svg and system.n_qa > 1:
            values = np.array([p.value for p in points]).reshape(len(xs), len(ys)).T
            values[~np.isfinite(values)] = np.nan
            figure = heatmap_figure(xs, ys, values, "V", f"{scenario.name} value landscape")
            store.write_svg("landscape.svg", figure)

    store.finalize()
    return 0


def run_roadmap(args: argparse.Namespace) -> int:
    """
    Build (or load) the roadmap of the scenario's declared grasps.

    roadmap.json is the reloadable document; edges.csv lists the edges,
    walk.csv the random-walk replays and query.csv the queried trajectory.
    """
    scenario = load(args)
    system, params = scenario.system, scenario.params
    store = open_store(args, scenario, "roadmap")
    if args.load:
        roadmap = roadmap_service.load(args.load, scenario)
    else:
        if not scenario.base_grasps:
            raise InvalidScenarioError(
                f"scenario '{scenario.name}' declares no grasps to build a roadmap from"
            )
        roadmap = roadmap_service.build_roadmap(
            system, scenario.base_grasps, params, scenario.symmetries, seed=args.seed
        )
        roadmap.scenario, roadmap.scenario_hash = scenario.name, scenario.content_hash
        store.write_json("roadmap.json", roadmap_service.to_document(roadmap))
    logger.info(f"Roadmap strongly connected: {roadmap.is_strongly_connected()}")

    store.write_csv(
        "edges.csv",
        ["source", "target", "length", "steps", "symmetry"],
        [[e.source, e.target, e.length, len(e.inputs), e.symmetry or ""] for e in roadmap.edges],
    )
    if args.svg:
        angles = np.linspace(0, 2 * np.pi, len(roadmap.vertices), endpoint=False)
        positions = np.column_stack([np.cos(angles), np.sin(angles)])
        edges = [(e.source, e.target) for e in roadmap.edges]
        store.write_svg("roadmap.svg", graph_figure(positions, edges, f"{scenario.name} roadmap"))

    if args.walk:
        walk = roadmap_service.random_walk(roadmap, args.walk, args.seed)
        logger.info(f"Random walk: {walk.successes}/{len(walk.steps)} edges replayed")
        store.write_csv(
            "walk.csv",
            ["step", "source", "target", "translation_error", "rotation_error", "success"],
            [
                [i, s.source, s.target, s.translation_error, s.rotation_error, s.success]
                for i, s in enumerate(walk.steps)
            ],
        )
    if args.query is not None:
        goal = np.asarray(args.query, dtype=float)
        result = roadmap_service.query_roadmap(roadmap, scenario.q0, goal, params)
        logger.info(f"Query path: {result.vertex_path}")
        rows = result.trajectory.rows(len(system.pairs))
        store.write_csv("query.csv", trace_header(system), rows)

    store.finalize()
    return 0
