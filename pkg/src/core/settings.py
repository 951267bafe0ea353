# src/core/settings.py
from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class SkamSettings(BaseSettings):
    """
    Process-wide numerical settings, read from SKAM_* environment variables
    or a local .env file.
    """

    model_config = SettingsConfigDict(env_prefix="SKAM_", env_file=".env", extra="ignore")

    workers: int = Field(default=1, ge=1)
    support_cap: int = Field(default=32, ge=1, description="K_max: largest allowed |k|_inf in a symbol's support")
    lattice_bound_cap: float = Field(default=8.0, ge=1.0)
    enumeration_cap: int = Field(default=200_000, ge=1)
    prune_tol: float = Field(default=1e-14, gt=0.0)
    grid_x_points: int = Field(default=17, ge=1)
    grid_xi_points: int = Field(default=33, ge=2)
    xi_window: float = Field(default=2.0, gt=0.0)
    interior_margin: int = Field(default=2, ge=1)


@lru_cache(maxsize=1)
def get_settings() -> SkamSettings:
    return SkamSettings()
