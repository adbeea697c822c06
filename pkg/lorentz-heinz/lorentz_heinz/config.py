"""Environment defaults and key=value config files"""
import os
from pathlib import Path

from dotenv import dotenv_values, load_dotenv

from lorentz_heinz.errors import ConfigError

load_dotenv()

LOG_LEVEL = os.getenv("LORENTZ_LOG_LEVEL", "WARNING")
WORKERS = int(os.getenv("LORENTZ_WORKERS", "1"))
TOLERANCE = float(os.getenv("LORENTZ_TOLERANCE", "1e-6"))
LIGHTLIKE_TOL = float(os.getenv("LORENTZ_LIGHTLIKE_TOL", "1e-9"))
CHUNK_SIZE = int(os.getenv("LORENTZ_CHUNK_SIZE", "16384"))


def load_config_file(path) -> dict:
    """Read a plain key=value file; keys are flag names without leading dashes"""
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigError(f"config file {config_path} not found")

    values = {}
    for key, value in dotenv_values(config_path).items():
        if value is None:
            raise ConfigError(f"config key '{key}' has no value")
        values[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return values


def parse_floats(text: str, key: str) -> list[float]:
    """Parse a comma-separated list such as '1,10,100'"""
    try:
        return [float(item) for item in str(text).split(",") if item.strip()]
    except ValueError:
        raise ConfigError(f"'{key}' expects comma-separated numbers, got '{text}'") from None
