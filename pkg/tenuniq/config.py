import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .exceptions import ConfigError

load_dotenv()

# Numerical rank
DEFAULT_RANK_TOL = 1e-9
KRANK_COLUMN_CAP = 25

# Generic bound scan
DEFAULT_R_CAP = 200
LITERATURE_IJK_LIMIT = 15000

# Falsifier search
SUPPORT_ENUM_CAP = 5000
DEFAULT_FALSIFY_TRIALS = 256
MAX_FALSIFY_TRIALS = 10**6
SUPPORT_FLOOR = 1e-4
PROBE_ITERS = 60
WITNESS_RANGE_RESIDUAL = 1e-8

# ALS and the empirical protocol
ALS_MAX_ITERS = 2000
ALS_MAX_ITERS_LIMIT = 10**5
ALS_FIT_TOL = 1e-9
ALS_N_INITS = 20
MATCH_CONGRUENCE = 0.99
MISMATCH_CONGRUENCE = 0.9
FIT_GATE_FACTOR = 10.0

# Environment
THREADS_ENV = "TENUNIQ_THREADS"
LOG_LEVEL_ENV = "TENUNIQ_LOG_LEVEL"
DEFAULT_LOG_LEVEL = "INFO"

MAX_SEED = 2**64 - 1


def max_workers() -> int:
    """Worker cap for internal parallelism, read from TENUNIQ_THREADS."""
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)


def log_level() -> str:
    return os.environ.get(LOG_LEVEL_ENV, DEFAULT_LOG_LEVEL).upper()


class Settings(BaseModel):
    """Tunable defaults, optionally overridden from a YAML file."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    rank_tol: float = Field(default=DEFAULT_RANK_TOL, ge=0.0, lt=1.0)
    krank_column_cap: int = Field(default=KRANK_COLUMN_CAP, ge=1)
    r_cap: int = Field(default=DEFAULT_R_CAP, ge=1)
    support_enum_cap: int = Field(default=SUPPORT_ENUM_CAP, ge=1)
    falsify_trials: int = Field(default=DEFAULT_FALSIFY_TRIALS, ge=0, le=MAX_FALSIFY_TRIALS)
    support_floor: float = Field(default=SUPPORT_FLOOR, gt=0.0, lt=1.0)
    probe_iters: int = Field(default=PROBE_ITERS, ge=1)
    als_max_iters: int = Field(default=ALS_MAX_ITERS, ge=1, le=ALS_MAX_ITERS_LIMIT)
    als_fit_tol: float = Field(default=ALS_FIT_TOL, gt=0.0)
    als_n_inits: int = Field(default=ALS_N_INITS, ge=1)
    match_congruence: float = Field(default=MATCH_CONGRUENCE, ge=0.0, le=1.0)
    mismatch_congruence: float = Field(default=MISMATCH_CONGRUENCE, ge=0.0, le=1.0)
    fit_gate_factor: float = Field(default=FIT_GATE_FACTOR, gt=0.0)


def load_settings(path: Optional[str] = None) -> Settings:
    """Load defaults, applying the YAML overrides in ``path`` when given."""
    if path is None:
        return Settings()

    try:
        raw: Any = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e

    overrides: Dict[str, Any] = raw or {}
    if not isinstance(overrides, dict):
        raise ConfigError(f"Config file {path} must contain a mapping")
    try:
        return Settings(**overrides)
    except ValidationError as e:
        raise ConfigError(f"Invalid config file {path}: {e}") from e
