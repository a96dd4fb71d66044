"""
ramlab - Configuration

Resource guards for the exhaustive computations and logging setup for the CLI.
Every guard has an environment override; a `.env` file in the working
directory is honoured.
"""

import os
import logging
from dataclasses import dataclass, fields
from typing import Optional

from dotenv import load_dotenv
from pythonjsonlogger import jsonlogger

from ramlab.errors import GuardExceededError, InvalidInputError

logger = logging.getLogger(__name__)


# =============================================================================
# GUARDS
# =============================================================================

GUARD_ENV_VARS = {
    "enumeration_limit": "RAMLAB_GUARD_LIMIT",
    "quotient_vertex_limit": "RAMLAB_QUOTIENT_VERTEX_LIMIT",
    "exact_tuple_limit": "RAMLAB_EXACT_TUPLE_LIMIT",
    "exact_n_limit": "RAMLAB_EXACT_N_LIMIT",
    "subset_vertex_limit": "RAMLAB_SUBSET_VERTEX_LIMIT",
    "mixing_vertex_limit": "RAMLAB_MIXING_VERTEX_LIMIT",
    "dense_dimension_limit": "RAMLAB_DENSE_DIMENSION_LIMIT",
}


@dataclass(frozen=True)
class GuardConfig:
    """
    Limits checked before any exhaustive computation allocates its state.

    Attributes:
        enumeration_limit: Max number of words / closed paths enumerated
        quotient_vertex_limit: Max |V| of a core graph whose quotients are searched
        exact_tuple_limit: Max |S_n|^rank permutation tuples in an exact average
        exact_n_limit: Max n for exact averages over S_n
        subset_vertex_limit: Max |V| for 2^|V| subset scans
        mixing_vertex_limit: Max |V| for scans over pairs of subsets
        dense_dimension_limit: Max matrix dimension for dense eigen-solves
    """
    enumeration_limit: int = 4 ** 10
    quotient_vertex_limit: int = 12
    exact_tuple_limit: int = 120 ** 3
    exact_n_limit: int = 5
    subset_vertex_limit: int = 20
    mixing_vertex_limit: int = 12
    dense_dimension_limit: int = 5000

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise InvalidInputError(f"guard {f.name} must be positive")

    @classmethod
    def from_env(cls, dotenv_path: Optional[str] = None) -> "GuardConfig":
        """Build guards from RAMLAB_* environment variables (and `.env`)."""
        load_dotenv(dotenv_path)
        values = {}
        for name, env_var in GUARD_ENV_VARS.items():
            raw = os.getenv(env_var)
            if raw is None:
                continue
            try:
                values[name] = int(raw)
            except ValueError:
                raise InvalidInputError(f"{env_var} must be an integer, got {raw!r}") from None
        if values:
            logger.debug(f"Guard overrides from environment: {values}")
        return cls(**values)

    def check(self, guard: str, requested: int, detail: Optional[str] = None) -> None:
        """Raise GuardExceededError if `requested` is above the named limit."""
        limit = getattr(self, guard)
        if requested > limit:
            raise GuardExceededError(guard, requested, limit, detail)


DEFAULT_GUARDS = GuardConfig()


def resolve_guards(guards: Optional[GuardConfig]) -> GuardConfig:
    return guards if guards is not None else DEFAULT_GUARDS


# =============================================================================
# LOGGING
# =============================================================================

def setup_logging(level: Optional[str] = None) -> None:
    """
    Route ramlab log records to stderr as JSON lines.

    Level comes from the argument, else RAMLAB_LOG_LEVEL, else WARNING.
    """
    load_dotenv()
    level_name = (level or os.getenv("RAMLAB_LOG_LEVEL", "WARNING")).upper()
    handler = logging.StreamHandler()
    handler.setFormatter(
        jsonlogger.JsonFormatter("%(asctime)s %(levelname)s %(name)s %(message)s")
    )
    root = logging.getLogger("ramlab")
    root.handlers[:] = [handler]
    root.setLevel(level_name)
    root.propagate = False
