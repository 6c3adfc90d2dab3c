from pydantic_settings import BaseSettings
from functools import lru_cache


class Settings(BaseSettings):
    # Execution
    workers: int = 1
    noise_block: int = 1024

    # Numerics
    overflow_guard: float = 1e150
    pathwise_tolerance: float = 1e-9
    constant_draws: int = 10_000

    # Service
    rate_limit: str = "10/minute"

    # App
    log_level: str = "INFO"
    debug: bool = False

    class Config:
        env_file = ".env"
        env_prefix = "TSGD_"


@lru_cache()
def get_settings() -> Settings:
    return Settings()
