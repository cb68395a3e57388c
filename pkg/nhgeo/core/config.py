from pydantic_settings import BaseSettings
from functools import lru_cache


class Settings(BaseSettings):
    """
    Process-wide defaults using Pydantic BaseSettings.
    Automatically loads from environment variables (prefix NHGEO_) and a .env file.
    """

    # Logging / output
    log_level: str = "INFO"
    output_dir: str = "runs"
    csv_digits: int = 17

    # Finite differences
    metric_fd_step: float = 1e-6      # metric partials
    nested_fd_step: float = 1e-5      # derivatives of derived fields
    jacobian_step: float = 1e-5       # tangent map of exp_nh

    # Integration / solvers
    integrator_steps: int = 1000
    constraint_tol: float = 1e-10
    newton_max_iter: int = 50
    newton_tol: float = 1e-10

    class Config:
        env_file = ".env"
        env_prefix = "NHGEO_"
        case_sensitive = False
        extra = "ignore"  # Ignore extra environment variables


@lru_cache()
def get_settings():
    """
    Create a cached instance of settings.
    This ensures settings are loaded only once.
    """
    return Settings()


# Export settings instance for easy access
settings = get_settings()

METRIC_FD_STEP = settings.metric_fd_step
NESTED_FD_STEP = settings.nested_fd_step
JACOBIAN_STEP = settings.jacobian_step
CONSTRAINT_TOL = settings.constraint_tol
