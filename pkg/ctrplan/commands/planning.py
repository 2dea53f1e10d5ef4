import argparse
import itertools
import logging
from typing import List

import numpy as np

from ctrplan.commands.common import (
    add_planner_arguments,
    add_scenario_arguments,
    float_list,
    goal_of,
    int_list,
    load,
    open_store,
    robot_vector,
    variant_list,
)
from ctrplan.cqdc import trace_header
from ctrplan.models import Trajectory
from ctrplan.services.artifact_service import trajectory_figure
from ctrplan.services.planner_service import planner_service
from ctrplan.softsim import SoftPlant

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    plan = subparsers.add_parser("plan", help="CtrTrajOpt from the scenario start")
    add_scenario_arguments(plan)
    add_planner_arguments(plan)
    plan.add_argument(
        "--guess", type=float_list, default=None, help="initial command instead of the heuristic"
    )
    plan.set_defaults(handler=run_plan)

    mpc = subparsers.add_parser(
        "mpc", help="receding-horizon control on the quasidynamic or soft plant"
    )
    add_scenario_arguments(mpc)
    add_planner_arguments(mpc)
    mpc.add_argument("--plant", choices=("cqdc", "soft"), default="cqdc")
    mpc.set_defaults(handler=run_mpc)

    bench = subparsers.add_parser("bench", help="MPC goal suite over variants, radii and horizons")
    add_scenario_arguments(bench)
    add_planner_arguments(bench)
    bench.add_argument("--goals", type=int, default=50)
    bench.add_argument("--variants", type=variant_list, default=["etr", "ctr", "r-ctr"])
    bench.add_argument("--radii", type=float_list, default=None)
    bench.add_argument("--horizons", type=int_list, default=None, help="planning horizons T")
    bench.add_argument("--rollouts", type=int_list, default=None, help="rollout horizons H")
    bench.add_argument(
        "--goal-scale", type=float, default=None, help="motion-set enlargement for goal sampling"
    )
    bench.add_argument("--plant", choices=("cqdc", "soft"), default="cqdc")
    bench.set_defaults(handler=run_bench)


def _write_trajectory(store, scenario, trajectory: Trajectory, name: str, svg: bool) -> None:
    system = scenario.system
    store.write_csv(f"{name}.csv", trace_header(system), trajectory.rows(len(system.pairs)))
    if svg:
        configurations = np.asarray(trajectory.configurations)
        series = [configurations[:, i] for i in system.object_indices]
        labels = [f"q{i}" for i in system.object_indices]
        store.write_svg(
            f"{name}.svg",
            trajectory_figure(range(len(configurations)), series, labels, scenario.name),
        )


def run_plan(args: argparse.Namespace) -> int:
    """Heuristic initial guess followed by CtrTrajOpt; writes plan.csv and trajectory.csv."""
    scenario = load(args)
    system, params = scenario.system, scenario.params
    goal = goal_of(args, scenario)
    if args.guess is not None:
        guess = robot_vector(args.guess, scenario, system.split(scenario.q0)[1])
    else:
        guess = planner_service.initial_guess_heuristic(system, scenario.q0)
    result = planner_service.ctr_trajopt(
        system, scenario.q0, goal, np.tile(guess, (params.horizon, 1)), params
    )
    translation, rotation = system.object_pose_error(system.split(result.trajectory.final)[0], goal)
    logger.info(
        f"CtrTrajOpt: {result.iterations} iterations, converged={result.converged}, "
        f"translation error {translation:.4f}, rotation error {rotation:.4f}"
    )

    store = open_store(args, scenario, "plan")
    store.write_csv(
        "plan.csv",
        ["iteration", "objective"],
        [[i + 1, value] for i, value in enumerate(result.objectives)],
    )
    store.write_csv(
        "inputs.csv",
        ["t", *[f"u{i}" for i in range(system.n_qa)]],
        [[t, *u] for t, u in enumerate(result.inputs)],
    )
    _write_trajectory(store, scenario, result.trajectory, "trajectory", args.svg)
    store.finalize()
    return 0


def run_mpc(args: argparse.Namespace) -> int:
    """Receding-horizon loop on the quasidynamic model, or re-planned chunks on the soft plant."""
    scenario = load(args)
    system, params = scenario.system, scenario.params
    goal = goal_of(args, scenario)
    store = open_store(args, scenario, "mpc")

    if args.plant == "cqdc":
        result = planner_service.mpc_rollout(
            system, scenario.q0, goal, params, project_every_step=params.project_every_step
        )
        trajectory, infeasible, lost = result.trajectory, result.infeasible, 0
    else:
        outcome = planner_service.mpc_second_order(
            system, scenario.q0, goal, params, SoftPlant(system)
        )
        trajectory = Trajectory(configurations=outcome.configurations, inputs=outcome.inputs)
        infeasible, lost = outcome.infeasible, outcome.lost_contact_events

    translation, rotation = system.object_pose_error(system.split(trajectory.final)[0], goal)
    logger.info(f"MPC terminal error: translation {translation:.4f}, rotation {rotation:.4f}")
    _write_trajectory(store, scenario, trajectory, "trajectory", args.svg)
    store.write_csv(
        "summary.csv",
        [
            "plant",
            "steps",
            "translation_error",
            "rotation_error",
            "infeasible",
            "lost_contact_events",
        ],
        [[args.plant, trajectory.horizon, translation, rotation, infeasible, lost]],
    )
    store.finalize()
    return 0


def run_bench(args: argparse.Namespace) -> int:
    """
    Goal suite sampled from the enlarged motion set at a contacting start.

    runs.csv has one row per (variant, r, T, H, goal); aggregate.csv the mean
    and spread of the terminal errors per configuration.
    """
    scenario = load(args)
    system, base = scenario.system, scenario.params
    contact_robot = planner_service.initial_guess_heuristic(system, scenario.q0)
    q_bar = system.compose(system.split(scenario.q0)[0], contact_robot)
    scale = args.goal_scale if args.goal_scale is not None else scenario.grasp.goal_scale
    goals = planner_service.generate_goals(system, q_bar, args.goals, args.seed, base, scale=scale)
    logger.info(
        f"Do-nothing error: translation {goals.mean_translation:.4f}, "
        f"rotation {goals.mean_rotation:.4f}"
    )

    radii = args.radii or [base.trust_region.radius]
    horizons = args.horizons or [base.horizon]
    rollouts = args.rollouts or [base.rollout_horizon]
    runs: List[list] = []
    aggregate: List[list] = []
    sweep = itertools.product(args.variants, radii, horizons, rollouts)
    for variant, radius, horizon, rollout_horizon in sweep:
        data = base.model_dump()
        data.update(horizon=horizon, rollout_horizon=rollout_horizon)
        data["trust_region"].update(variant=variant, radius=radius)
        params = type(base).model_validate(data)
        errors, infeasible_count, lost_total = [], 0, 0
        for index, goal in enumerate(goals.goals):
            if args.plant == "cqdc":
                result = planner_service.mpc_rollout(
                    system, q_bar, goal, params, project_every_step=params.project_every_step
                )
                final, infeasible, lost = result.final, result.infeasible, 0
            else:
                outcome = planner_service.mpc_second_order(
                    system, q_bar, goal, params, SoftPlant(system)
                )
                final, infeasible = outcome.state.q, outcome.infeasible
                lost = outcome.lost_contact_events
            translation, rotation = system.object_pose_error(system.split(final)[0], goal)
            errors.append((translation, rotation))
            infeasible_count += int(infeasible)
            lost_total += lost
            setting = [variant, radius, horizon, rollout_horizon, index]
            runs.append([*setting, translation, rotation, infeasible, lost])
        errors_array = np.asarray(errors)
        success = 0.0
        if errors:
            success = np.mean((errors_array[:, 0] <= 0.01) & (errors_array[:, 1] <= 0.05))
        aggregate.append(
            [
                variant, radius, horizon, rollout_horizon,
                errors_array[:, 0].mean(), errors_array[:, 0].std(),
                errors_array[:, 1].mean(), errors_array[:, 1].std(),
                success, infeasible_count, lost_total,
            ]
        )
        logger.info(
            f"{variant} r={radius} T={horizon} H={rollout_horizon}: "
            f"mean error {errors_array[:, 0].mean():.4f} m / {errors_array[:, 1].mean():.4f} rad, "
            f"success {success:.0%}, infeasible {infeasible_count}"
        )

    store = open_store(args, scenario, "bench")
    store.write_csv(
        "goals.csv",
        ["goal", *[f"qo{i}" for i in range(system.n_qo)]],
        [[i, *g] for i, g in enumerate(goals.goals)],
    )
    store.write_csv(
        "runs.csv",
        [
            "variant",
            "radius",
            "T",
            "H",
            "goal",
            "translation_error",
            "rotation_error",
            "infeasible",
            "lost_contact_events",
        ],
        runs,
    )
    store.write_csv(
        "aggregate.csv",
        [
            "variant", "radius", "T", "H",
            "translation_mean", "translation_std", "rotation_mean", "rotation_std",
            "success_rate", "infeasible_count", "lost_contact_events",
        ],
        aggregate,
    )
    store.finalize()
    return 0
