"""Configuration management for game-lab."""

import os
from typing import Optional

from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables
load_dotenv()


class AppConfig(BaseSettings):
    """Application configuration."""

    model_config = SettingsConfigDict(env_prefix="GAME_LAB_", env_file=".env", extra="ignore")

    log_level: str = Field(default="INFO")
    log_file: Optional[str] = Field(default=None)
    threads: Optional[int] = Field(default=None, ge=1)


class NumericsConfig(BaseSettings):
    """Numerical defaults shared by the solvers."""

    model_config = SettingsConfigDict(env_prefix="GAME_LAB_NUMERICS_", env_file=".env", extra="ignore")

    q_min: float = Field(default=0.01, gt=0.0, lt=1.0)
    q_max: float = Field(default=0.99, gt=0.0, lt=1.0)

    # scalar maximization
    coarse_grid_points: int = Field(default=64, ge=3)
    search_xtol: float = Field(default=1e-10, gt=0.0)
    bisect_xtol: float = Field(default=1e-12, gt=0.0)

    # fixed points and linearization
    eta: float = Field(default=0.2, gt=0.0, le=1.0)
    fixed_point_tol: float = Field(default=1e-10, gt=0.0)
    max_iter: int = Field(default=100_000, ge=1)
    fd_step: float = Field(default=1e-6, gt=0.0)
    eps: float = Field(default=1e-8, gt=0.0)
    residual_tol: float = Field(default=1e-6, gt=0.0)

    # integration
    max_dt: float = Field(default=0.1, gt=0.0)
    descent_tol: float = Field(default=1e-9, ge=0.0)
    capture_radius: float = Field(default=1e-3, gt=0.0)
    basin_t_end: float = Field(default=200.0, gt=0.0)

    # sweeps
    alpha_grid_points: int = Field(default=21, ge=2)
    threshold_width: float = Field(default=1e-3, gt=0.0)

    # power-cost and power-control variants
    regime_ratio: float = Field(default=20.0, gt=1.0)
    power_box_factor: float = Field(default=10.0, gt=1.0)
    power_grid_points: int = Field(default=256, ge=3)
    power_price: float = Field(default=1e-3, gt=0.0)
    power_sweep_tol: float = Field(default=1e-4, gt=0.0)
    power_sweep_max_iter: int = Field(default=2_000, ge=1)


class GameLabConfig:
    """Main configuration class."""

    def __init__(self):
        self.app = AppConfig()
        self.numerics = NumericsConfig()

    def max_workers(self) -> int:
        """Worker threads for sweeps and basin grids."""
        return self.app.threads or os.cpu_count() or 1


# Global configuration instance
config = GameLabConfig()
