from typing import Iterable, List, Optional


class CtrPlanError(Exception):
    """Base class for domain failures; the CLI maps it to exit code 1."""

    code = "error"

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail

    def __str__(self) -> str:
        return f"[{self.code}] {self.detail}"


class InfeasibleStartError(CtrPlanError):
    code = "infeasible-start"

    def __init__(self, message: str = "No strictly feasible starting point found"):
        super().__init__(message)


class NumericalFailureError(CtrPlanError):
    code = "numerical-failure"

    def __init__(self, message: str = "Hessian factorization failed"):
        super().__init__(message)


class SolverInfeasibleError(CtrPlanError):
    code = "infeasible"

    def __init__(self, message: str = "Conic program is infeasible", knot: Optional[int] = None):
        if knot is not None:
            message = f"{message} (first infeasible knot: {knot})"
        super().__init__(message)
        self.knot = knot


class DegenerateRegionError(CtrPlanError):
    code = "degenerate-region"

    def __init__(self, acceptance_rate: float, proposals: int):
        super().__init__(
            f"Trust region acceptance rate {acceptance_rate:.2e} after {proposals} proposals"
        )
        self.acceptance_rate = acceptance_rate
        self.proposals = proposals


class DegenerateHullError(CtrPlanError):
    code = "degenerate-hull"

    def __init__(self, message: str = "Point cloud is flat; convex hull has no interior"):
        super().__init__(message)


class PlantDivergedError(CtrPlanError):
    code = "plant-diverged"

    def __init__(self, step: int, norm: float):
        super().__init__(f"Plant state left the workspace at step {step} (|q| = {norm:.3g})")
        self.step = step


class NoFeasibleGraspError(CtrPlanError):
    code = "no-feasible-grasp"

    def __init__(self, n_samples: int):
        super().__init__(f"None of the {n_samples} grasp samples is feasible")


class RoadmapDisconnectedError(CtrPlanError):
    code = "disconnected"

    def __init__(self, source: int, target: int, reachable: Iterable[int]):
        self.reachable: List[int] = sorted(reachable)
        super().__init__(
            f"Vertex {target} is not reachable from vertex {source}; "
            f"reachable component: {self.reachable}"
        )


class ScenarioNotFoundError(CtrPlanError):
    code = "unknown-scenario"

    def __init__(self, name: str, suggestions: Iterable[str] = ()):
        self.suggestions = list(suggestions)
        message = f"Scenario '{name}' not found"
        if self.suggestions:
            message += f"; did you mean {', '.join(repr(s) for s in self.suggestions)}?"
        super().__init__(message)


class InvalidScenarioError(CtrPlanError):
    code = "invalid-scenario"

    def __init__(self, message: str):
        super().__init__(message)
