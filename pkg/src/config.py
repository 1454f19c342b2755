"""
Runtime settings for the planner and CLI.

Values come from environment variables (optionally loaded from a ``.env``
file) with sensible defaults, so experiments can be tuned without editing
scenario files.
"""

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

BUNDLED_SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"

_TRUTHY = {"1", "true", "yes", "on"}


@dataclass(frozen=True)
class Settings:
    """Process-wide settings read from the environment."""
    threads: int = 1
    output_dir: Path = Path("./output")
    log_level: str = "WARNING"
    check_invariants: bool = False
    scenario_dir: Path = BUNDLED_SCENARIO_DIR

    @classmethod
    def from_env(cls) -> "Settings":
        """
        Build settings from ``AIA_*`` environment variables.

        Raises:
            ValueError: If ``AIA_THREADS`` is not a positive integer.
        """
        threads = int(os.getenv("AIA_THREADS", "1"))
        if threads < 1:
            raise ValueError(f"AIA_THREADS must be >= 1, got {threads}")

        return cls(
            threads=threads,
            output_dir=Path(os.getenv("AIA_OUTPUT_DIR", "./output")),
            log_level=os.getenv("AIA_LOG_LEVEL", "WARNING").upper(),
            check_invariants=os.getenv("AIA_CHECK_INVARIANTS", "").lower() in _TRUTHY,
            scenario_dir=Path(os.getenv("AIA_SCENARIO_DIR", str(BUNDLED_SCENARIO_DIR))),
        )


# Global settings instance (lazy initialization)
_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Get or create the global settings."""
    global _settings
    if _settings is None:
        _settings = Settings.from_env()
    return _settings


def reset_settings() -> None:
    """Drop the cached settings so the next call re-reads the environment."""
    global _settings
    _settings = None
