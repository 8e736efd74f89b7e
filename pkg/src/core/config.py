"""
Core configuration settings for binding-bench
"""
from typing import Optional
from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field


class Settings(BaseSettings):
    """Process-wide defaults, overridable through BINDING_BENCH_* variables"""

    # Logging
    LOG_LEVEL: str = Field(default="INFO")
    LOG_FORMAT: str = Field(default="console")  # console | json

    # Size guards
    DIM_LIMIT: int = Field(default=2_000_000)  # Fock basis dimension guard
    MODE_LIMIT: int = Field(default=200_000)  # enumerate_ball size limit

    # Eigensolver
    DENSE_THRESHOLD: int = Field(default=2000)
    EIGEN_TOL: float = Field(default=1e-12)
    EIGEN_MAXITER: int = Field(default=5000)
    RESIDUAL_TOL: float = Field(default=1e-10)

    # Resolvent linear solves
    SOLVER_TOL: float = Field(default=1e-12)
    SOLVER_MAXITER: int = Field(default=20000)

    # Matrix-free matvec above this many stored entries
    MATRIX_FREE_NNZ: int = Field(default=1_000_000)

    # Reproducibility / parallelism
    WORKERS: int = Field(default=1)
    DETERMINISTIC: bool = Field(default=True)
    SEED: int = Field(default=20240611)

    # Diagnostics ledger (JSON lines); None disables the file
    DIAGNOSTICS_PATH: Optional[str] = Field(default=None)

    model_config = SettingsConfigDict(
        env_prefix="BINDING_BENCH_",
        env_file=[".env.local", ".env"],
        env_file_encoding="utf-8",
        extra="ignore",
    )


_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Get application settings (singleton pattern)"""
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings


def reset_settings() -> None:
    """Drop the cached settings so the next call re-reads the environment"""
    global _settings
    _settings = None


def override_settings(**overrides) -> Settings:
    """Replace the singleton with a copy carrying per-run overrides (None values ignored)"""
    global _settings
    updates = {k: v for k, v in overrides.items() if v is not None}
    _settings = get_settings().model_copy(update=updates)
    return _settings
