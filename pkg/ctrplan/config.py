from typing import List
from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Application
    APP_NAME: str = "ctrplan"
    APP_VERSION: str = "1.0.0"
    ENVIRONMENT: str = "development"
    DEBUG: bool = False

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "text"

    # Artifacts
    OUTPUT_DIR: str = "artifacts"
    DETERMINISTIC_ARTIFACTS: bool = True

    # Barrier Newton solver
    NEWTON_TOL: float = 1e-10  # scaled by 1 + ||b||
    NEWTON_MAX_ITERATIONS: int = 100
    FRACTION_TO_BOUNDARY: float = 0.99
    CHOLESKY_REGULARIZATION: float = 1e-10
    BARRIER_CONTINUATION_FACTOR: float = 10.0
    BARRIER_INITIAL_KAPPA: float = 10.0

    # SOCP solver
    SOCP_TOL: float = 1e-9
    SOCP_MAX_ITERATIONS: int = 200

    # Dynamics and sensitivities
    RETRACTION_SLACK: float = 1e-6
    FD_STEP: float = 1e-5
    LINEARIZATION_MODE: str = "finite-difference"

    # Trust region sampling
    SAMPLE_CHUNK_SIZE: int = 1000
    SAMPLE_MAX_PROPOSALS: int = 100_000
    SAMPLE_MIN_ACCEPTANCE: float = 1e-3
    HULL_SAMPLES: int = 1000

    # Planner
    HEURISTIC_KAPPA: float = 50.0
    HEURISTIC_MAX_ITERATIONS: int = 500
    HEURISTIC_CONTACT_DISTANCE: float = 1e-4
    CONVERGENCE_TOL: float = 1e-6
    COST_DECREASE_TOL: float = 1e-8

    # Second-order plant
    SOFTSIM_DT: float = 1e-3
    WORKSPACE_BOUND: float = 10.0
    LOST_CONTACT_DISTANCE: float = 5e-3
    LOST_CONTACT_STEPS: int = 5

    # Global planning
    EDGE_TRANSLATION_TOL: float = 5e-3
    EDGE_ROTATION_TOL: float = 2e-2
    COLLISION_RESOLUTION: float = 1e-3
    COLLISION_TOL: float = 1e-6
    RRT_MAX_ITERATIONS: int = 10_000
    RRT_GOAL_BIAS: float = 0.2
    RRT_STEP: float = 0.02
    IK_STEP_BOUND: float = 0.05
    IK_TOL: float = 1e-4
    IK_MAX_ITERATIONS: int = 100

    # Scenario search paths for JSON documents, comma separated
    SCENARIO_PATHS: str = ""

    @field_validator("LINEARIZATION_MODE")
    @classmethod
    def check_linearization_mode(cls, v: str) -> str:
        if v not in ("finite-difference", "frozen-geometry"):
            raise ValueError(f"unsupported linearization mode '{v}'")
        return v

    @field_validator("HEURISTIC_KAPPA")
    @classmethod
    def check_heuristic_kappa(cls, v: float) -> float:
        if not 10.0 <= v <= 100.0:
            raise ValueError("HEURISTIC_KAPPA must lie in [10, 100]")
        return v

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore"
    )

    @property
    def scenario_paths_list(self) -> List[str]:
        return [p.strip() for p in self.SCENARIO_PATHS.split(",") if p.strip()]


settings = Settings()
