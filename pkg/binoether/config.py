"""Application configuration"""

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Library and CLI settings loaded from BINOETHER_* environment variables"""

    model_config = SettingsConfigDict(
        env_prefix="BINOETHER_",
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
    )

    # Runtime
    THREADS: int = 4
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"
    OUTPUT_DIR: str = "./reports"

    # Finite differences: h = FD_STEP_SCALE * eps^(1/3) * max(1, |z|)
    FD_STEP_SCALE: float = 1.0

    # Exterior calculus
    PAIR_TOL: float = 1e-8
    CALIBRATION_N: int = 3
    CALIBRATION_STATES: int = 10
    CALIBRATION_TOL: float = 1e-9

    # Periodic grid defaults
    GRID_N: int = 256
    GRID_L: float = 40.0
    EDGE_FRACTION: float = 0.75
    TAIL_TOL: float = 1e-8

    @field_validator("DEBUG", mode="before")
    @classmethod
    def parse_debug(cls, v):
        """Parse DEBUG from string"""
        if isinstance(v, str):
            return v.lower() in ("true", "1", "yes", "on")
        return v

    @field_validator("THREADS")
    @classmethod
    def clamp_threads(cls, v):
        """At least one worker"""
        return max(1, int(v))


settings = Settings()
