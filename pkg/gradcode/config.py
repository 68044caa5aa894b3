"""
Configuration management with environment handling
"""
import logging
from functools import lru_cache
from typing import Optional

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Logging (GRADCODE_LOG, GRADCODE_LOG_FILE)
    log: str = "WARNING"
    log_file: Optional[str] = None

    # Monte Carlo
    threads: int = 1
    chunk_trials: int = 1000

    # Output
    float_digits: int = 12

    # Numerics
    rank_tolerance: float = 1e-9
    ls_clip_tolerance: float = 1e-9

    # Trainer
    max_retries: int = 10

    model_config = SettingsConfigDict(
        env_prefix="GRADCODE_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    @field_validator("log", mode="before")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        level = str(v).upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ValueError(f"unknown log level {v!r}")
        return level

    @field_validator("threads", "chunk_trials", "float_digits")
    @classmethod
    def validate_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be a positive integer")
        return v


@lru_cache()
def get_settings() -> Settings:
    return Settings()


settings = get_settings()
