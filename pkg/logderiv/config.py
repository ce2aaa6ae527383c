"""Run defaults and numeric tolerances, read from the environment"""
import os
from typing import Dict

from dotenv import load_dotenv

from logderiv.errors import ConfigError

load_dotenv()


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name, str(default))
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from None


# Defaults for CLI flags and dashboard inputs
run_defaults: Dict[str, int] = {
    "seed": _int_env('LOGDET_SEED', 20240607),
    "samples": _int_env('LOGDET_SAMPLES', 10000),
    "threads": _int_env('LOGDET_THREADS', 1),
    "chunk_size": _int_env('LOGDET_CHUNK_SIZE', 2000),
    "identity_bound": _int_env('LOGDET_IDENTITY_BOUND', 8),
    "derivative_bound": _int_env('LOGDET_DERIVATIVE_BOUND', 5),
}

LOG_LEVEL = os.getenv('LOGDET_LOG_LEVEL', 'WARNING').upper()

tolerances: Dict[str, float] = {
    "pairing": 1e-8,        # conjugate eigenvalue pairing
    "clamp": 1e-12,         # angles pushed off 0 and pi
    "laurent": 1e-4,        # z-function switches to its Laurent series below this |x|
    "unit_eigenvalue": 1e-10,
}

# Hard ceilings on what the exact suite accepts
MAX_IDENTITY_K = 8
MAX_MOMENT_K = 8

if run_defaults["seed"] < 0:
    raise ConfigError("LOGDET_SEED must be nonnegative")
if run_defaults["chunk_size"] < 1 or run_defaults["threads"] < 1:
    raise ConfigError("LOGDET_CHUNK_SIZE and LOGDET_THREADS must be positive")
