"""Shared argument groups and helpers for the subcommands."""
import argparse
from pathlib import Path
from typing import List, Optional

import numpy as np

from ctrplan.scenarios import Scenario, load_scenario
from ctrplan.schemas import PlannerParams
from ctrplan.services.artifact_service import ArtifactStore
from ctrplan.utils.exceptions import InvalidScenarioError

VARIANTS = ("etr", "ctr", "r-ctr", "a-etr", "a-ctr", "ra-ctr")


def float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def variant_list(text: str) -> List[str]:
    names = [v.strip() for v in text.split(",") if v.strip()]
    for name in names:
        if name not in VARIANTS:
            raise argparse.ArgumentTypeError(
                f"unknown variant '{name}' (choose from {', '.join(VARIANTS)})"
            )
    return names


def add_scenario_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("scenario", help="built-in scenario name or path to a scenario JSON file")
    parser.add_argument(
        "--seed", type=int, default=0, help="seed for every random stream of the run"
    )
    parser.add_argument(
        "--out", type=Path, default=None, help="artifact directory (default: OUTPUT_DIR)"
    )
    parser.add_argument("--svg", action="store_true", help="also write SVG plots")
    parser.add_argument(
        "--deterministic",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="suppress SVG timestamps and random ids",
    )


def add_planner_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("planner overrides")
    group.add_argument("--goal", type=float_list, default=None, help="object goal configuration")
    group.add_argument("--variant", choices=VARIANTS, default=None)
    group.add_argument("--r", type=float, default=None, help="trust region radius")
    group.add_argument("--kappa", type=float, default=None, help="smoothing parameter")
    group.add_argument("--T", type=int, default=None, help="planning horizon")
    group.add_argument("--H", type=int, default=None, help="MPC rollout horizon")
    group.add_argument("--n-max", type=int, default=None, help="CtrTrajOpt iterations")
    group.add_argument("--eta", type=float, default=None, help="per-step input bound")
    group.add_argument("--N", type=int, default=None, help="re-plan rounds on the plant")
    group.add_argument("--project", action=argparse.BooleanOptionalAction, default=None,
                       help="re-run the initial-guess heuristic at every MPC step")


def planner_params(args: argparse.Namespace, base: PlannerParams) -> PlannerParams:
    """Scenario planner parameters with the command-line overrides applied and validated."""
    data = base.model_dump()
    overrides = {
        "horizon": getattr(args, "T", None),
        "rollout_horizon": getattr(args, "H", None),
        "max_iterations": getattr(args, "n_max", None),
        "input_bound": getattr(args, "eta", None),
        "replan_count": getattr(args, "N", None),
        "project_every_step": getattr(args, "project", None),
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    tr_overrides = {
        "variant": getattr(args, "variant", None),
        "radius": getattr(args, "r", None),
        "kappa": getattr(args, "kappa", None),
    }
    data["trust_region"].update({k: v for k, v in tr_overrides.items() if v is not None})
    return PlannerParams.model_validate(data)


def load(args: argparse.Namespace) -> Scenario:
    scenario = load_scenario(args.scenario)
    scenario.params = planner_params(args, scenario.params)
    return scenario


def goal_of(args: argparse.Namespace, scenario: Scenario) -> np.ndarray:
    goal: Optional[List[float]] = getattr(args, "goal", None)
    if goal is not None:
        if len(goal) != scenario.system.n_qo:
            raise InvalidScenarioError(
                f"--goal needs {scenario.system.n_qo} values, got {len(goal)}"
            )
        return np.asarray(goal, dtype=float)
    if scenario.goal is None:
        raise InvalidScenarioError(f"scenario '{scenario.name}' declares no goal; pass --goal")
    return scenario.goal


def robot_vector(
    values: Optional[List[float]], scenario: Scenario, default: np.ndarray
) -> np.ndarray:
    """Broadcast a single value or check the length of a per-DOF list."""
    if values is None:
        return np.asarray(default, dtype=float)
    n = scenario.system.n_qa
    if len(values) == 1:
        return np.full(n, values[0])
    if len(values) != n:
        raise InvalidScenarioError(f"expected {n} robot values, got {len(values)}")
    return np.asarray(values, dtype=float)


def open_store(args: argparse.Namespace, scenario: Scenario, command: str) -> ArtifactStore:
    return ArtifactStore(
        out_dir=args.out,
        command=command,
        argv=getattr(args, "argv", []),
        seed=args.seed,
        scenario=scenario.name,
        scenario_hash=scenario.content_hash,
        deterministic=args.deterministic,
    )


def object_columns(scenario: Scenario, prefix: str = "qo") -> List[str]:
    return [f"{prefix}{i}" for i in range(scenario.system.n_qo)]


def robot_columns(scenario: Scenario, prefix: str = "u") -> List[str]:
    return [f"{prefix}{i}" for i in range(scenario.system.n_qa)]
