import argparse
import logging
from typing import Dict, List

import numpy as np

from ctrplan.commands.common import add_scenario_arguments, float_list, load, open_store
from ctrplan.conic_solver import solve_barrier_newton
from ctrplan.cqdc import assemble, retraction_start
from ctrplan.sensitivity import gradient_check, linearize, taylor_residual
from ctrplan.utils.rng import make_rng

logger = logging.getLogger(__name__)

_INPUT_JITTER = 0.01
_TAYLOR_STEP = 1e-3


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "grad-check", help="compare analytic gradients with finite differences"
    )
    add_scenario_arguments(parser)
    parser.add_argument("--kappas", type=float_list, default=[1e2, 1e4])
    parser.add_argument(
        "--trials", type=int, default=1, help="random commands around the scenario start"
    )
    parser.add_argument(
        "--tolerance", type=float, default=1e-4, help="max relative error of B and D"
    )
    parser.add_argument(
        "--directions", type=int, default=10, help="random directions for the residual decay"
    )
    parser.add_argument(
        "--trace", action="store_true", help="dump the Newton iterations of the smoothed step"
    )
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    scenario = load(args)
    system = scenario.system
    q0 = scenario.q0
    u0 = system.split(q0)[1]
    store = open_store(args, scenario, "grad-check")

    rows, decay_rows = [], []
    worst = 0.0
    for trial in range(args.trials):
        rng = make_rng(args.seed, trial)
        u = u0 if trial == 0 else u0 + rng.uniform(-_INPUT_JITTER, _INPUT_JITTER, system.n_qa)
        for kappa in args.kappas:
            entries = gradient_check(system, q0, u, kappa)
            for e in entries:
                rows.append(
                    [trial, kappa, e.block, e.row, e.col, e.analytic, e.numeric, e.relative_error]
                )
                if e.block[0] in "BD":
                    worst = max(worst, e.relative_error)

            # First-order residual decays quadratically with the perturbation size
            lin = linearize(system, q0, u, kappa, with_configuration=True, mode="frozen-geometry")
            for d in range(args.directions):
                direction = make_rng(args.seed, trial, d).standard_normal(system.n_q + system.n_qa)
                direction *= _TAYLOR_STEP / np.linalg.norm(direction)
                dq, du = direction[: system.n_q], direction[system.n_q :]
                full = taylor_residual(lin, dq, du)
                half = taylor_residual(lin, dq / 2.0, du / 2.0)
                ratio = half / full if full > 0.0 else 0.0
                decay_rows.append([trial, kappa, d, full, half, ratio])

    store.write_csv(
        "gradcheck.csv",
        ["trial", "kappa", "block", "row", "col", "analytic", "numeric", "relative_error"],
        rows,
    )
    store.write_csv(
        "taylor.csv",
        ["trial", "kappa", "direction", "residual", "residual_half", "ratio"],
        decay_rows,
    )

    if args.trace:
        trace: List[Dict[str, float]] = []
        problem = assemble(system, q0, u0)
        solve_barrier_newton(
            problem.to_program(), args.kappas[-1], x0=retraction_start(problem), trace=trace
        )
        header = sorted({key for entry in trace for key in entry})
        store.write_csv(
            "solver_trace.csv", header, [[entry.get(k, np.nan) for k in header] for entry in trace]
        )

    store.finalize()
    if worst > args.tolerance:
        logger.error(
            f"Gradient check failed: max relative error {worst:.2e} > {args.tolerance:.0e}"
        )
        return 1
    logger.info(f"Gradient check passed: max relative error {worst:.2e}")
    return 0
