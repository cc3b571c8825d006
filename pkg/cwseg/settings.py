import logging
from functools import lru_cache

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()


class Settings(BaseSettings):
    """Process-wide settings read from CWSEG_* environment variables or .env."""

    model_config = SettingsConfigDict(env_prefix="CWSEG_", env_file=".env", extra="ignore")

    log_level: str = "INFO"
    database_url: str = "sqlite:///cwseg_runs.db"
    record_runs: bool = False


@lru_cache
def get_settings() -> Settings:
    return Settings()


def configure_logging(level: str | None = None) -> None:
    """Set up root logging once per process."""
    level_name = (level or get_settings().log_level).upper()
    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
