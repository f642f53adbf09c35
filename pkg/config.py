from functools import lru_cache
from typing import Literal, Optional, TextIO
import logging

from pydantic_settings import BaseSettings, SettingsConfigDict

TOOL_VERSION = "0.3.0"

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    # Output settings
    FORMAT: Literal["json", "csv"] = "json"

    # Logging settings
    LOG_LEVEL: str = "WARNING"

    # Planning settings
    ENABLE_SHIFTS: bool = True
    MAX_WORKERS: int = 4

    # Cost model defaults (seconds per message, seconds per block)
    DEFAULT_LAMBDA: float = 0.0
    DEFAULT_TAU: float = 0.0

    # Simulation settings
    MAX_SIM_BLOCKS: int = 1_000_000

    # Application settings
    APP_NAME: str = "redistplan"

    model_config = SettingsConfigDict(
        env_prefix="REDISTPLAN_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )


@lru_cache()
def get_settings() -> Settings:
    logger.debug("Creating settings instance")
    return Settings()


def configure_logging(level: Optional[str] = None, stream: Optional[TextIO] = None) -> None:
    """
    Install the project log format on the root logger.

    Parameters:
    - level: logging level name, defaults to the LOG_LEVEL setting
    - stream: destination stream, defaults to stderr
    """
    level_name = (level or get_settings().LOG_LEVEL).upper()
    logging.basicConfig(
        level=getattr(logging, level_name, logging.WARNING),
        format=LOG_FORMAT,
        stream=stream,
        force=True,
    )
