"""
Runtime configuration and logging setup
"""

import logging
import os
import sys
from dataclasses import dataclass

from dotenv import load_dotenv

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


@dataclass(frozen=True)
class Settings:
    """Optional defaults; every value can be overridden from the command line"""

    log_level: str = "WARNING"
    normal_k: float = 4.0
    runner_timeout: float = 60.0
    history_db: str | None = None
    default_bins: int = 100


def load_settings() -> Settings:
    """
    Build settings from the environment (and a .env file if present)

    Returns:
        Settings: values from HTD_* variables, defaults otherwise
    """
    load_dotenv()
    return Settings(
        log_level=os.getenv("HTD_LOG_LEVEL", "WARNING").upper(),
        normal_k=float(os.getenv("HTD_NORMAL_K", "4.0")),
        runner_timeout=float(os.getenv("HTD_RUNNER_TIMEOUT", "60")),
        history_db=os.getenv("HTD_HISTORY_DB") or None,
        default_bins=int(os.getenv("HTD_DEFAULT_BINS", "100")),
    )


def configure_logging(level: str = "WARNING") -> None:
    """Send log records to stderr; stdout is reserved for command output"""
    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, "_htd_handler", False):
            root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler._htd_handler = True
    root.addHandler(handler)
    root.setLevel(getattr(logging, level.upper(), logging.WARNING))
