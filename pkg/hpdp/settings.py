"""
HPDP Dataflow Lab - Settings
============================
Version: 1.0.0
Status: PRODUCTION
Role: Environment-driven defaults (.env supported).
"""

import os
from dataclasses import dataclass
from pathlib import Path

from hpdp.errors import ParameterError

try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    pass

REPO_ROOT = Path(__file__).resolve().parent.parent
DEFAULT_CLOCK_HZ = 250_000_000


@dataclass(frozen=True)
class Settings:
    clock_hz: int = DEFAULT_CLOCK_HZ
    max_cycles: int = 50_000_000
    ram_words: int = 4096
    log_level: str = "INFO"
    suite_file: Path = REPO_ROOT / "config" / "table1.json"


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw, 0)
    except ValueError:
        raise ParameterError(f"{name} must be an integer, got {raw!r}") from None


def load_settings() -> Settings:
    """Reads HPDP_* variables; unset ones fall back to the defaults."""
    return Settings(
        clock_hz=_int_env("HPDP_CLOCK_HZ", DEFAULT_CLOCK_HZ),
        max_cycles=_int_env("HPDP_MAX_CYCLES", 50_000_000),
        ram_words=_int_env("HPDP_RAM_WORDS", 4096),
        log_level=os.getenv("HPDP_LOG_LEVEL", "INFO").upper(),
        suite_file=Path(os.getenv("HPDP_SUITE_FILE", str(REPO_ROOT / "config" / "table1.json"))),
    )
