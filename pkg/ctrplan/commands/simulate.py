import argparse
import logging

import numpy as np

from ctrplan.commands.common import (
    add_scenario_arguments,
    float_list,
    load,
    open_store,
    robot_vector,
)
from ctrplan.cqdc import rollout, trace_header
from ctrplan.models import Trajectory
from ctrplan.services.artifact_service import trajectory_figure
from ctrplan.softsim import SoftPlant

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("simulate", help="roll out a constant command on a plant")
    add_scenario_arguments(parser)
    parser.add_argument("--plant", choices=("cqdc", "soft"), default="cqdc")
    parser.add_argument("--u-const", type=float_list, default=None,
                        help="constant position command (one value or one per robot DOF)")
    parser.add_argument("--steps", type=int, default=10)
    parser.add_argument("--kappa", type=float, default=None,
                        help="roll the smoothed dynamics instead of the exact ones (cqdc plant)")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    """
    Simulate a scenario under a constant command.

    Writes trajectory.csv with (t, q, u, normal force per pair) and, with --svg,
    a plot of the object coordinates.
    """
    scenario = load(args)
    system = scenario.system
    u = robot_vector(args.u_const, scenario, system.split(scenario.q0)[1])
    inputs = [u] * args.steps

    if args.plant == "cqdc":
        trajectory = rollout(system, scenario.q0, inputs, kappa=args.kappa)
    else:
        plant = SoftPlant(system)
        state = plant.initial_state(scenario.q0)
        trajectory = Trajectory(configurations=[state.q])
        for command in inputs:
            state = plant.advance(state, command)
            trajectory.configurations.append(state.q)
            trajectory.inputs.append(command)
        logger.info(
            f"Soft plant: kinetic energy {plant.kinetic_energy(state):.3e}, "
            f"controller work {state.work:.3e}, lost-contact events {state.lost_contact_events}"
        )

    store = open_store(args, scenario, "simulate")
    store.write_csv("trajectory.csv", trace_header(system), trajectory.rows(len(system.pairs)))
    if args.svg:
        configurations = np.asarray(trajectory.configurations)
        series = [configurations[:, i] for i in system.object_indices]
        labels = [f"q{i}" for i in system.object_indices]
        title = f"{scenario.name} ({args.plant})"
        store.write_svg(
            "trajectory.svg",
            trajectory_figure(range(len(configurations)), series, labels, title=title),
        )
    store.finalize()
    logger.info(f"Final configuration: {np.array2string(trajectory.final, precision=5)}")
    return 0
