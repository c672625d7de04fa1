# src/common/config.py
"""
Shared configuration for the large-sets toolkit.

Values come from the environment (a local .env is loaded first), falling back
to the defaults below. The absolute constants of the probabilistic estimate
are settings, never inferred.
"""
import os
import sys
import time
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

# --- paths ---
LOG_FILE = Path(os.getenv("LARGESETS_LOG_FILE", "logs/largesets.log"))

# set LARGESETS_QUIET=1 to keep log lines out of stderr (file logging continues)
QUIET = os.getenv("LARGESETS_QUIET", "0") == "1"

# --- absolute constants (never fixed by the theory, default 1) ---
CONST_MAIN = float(os.getenv("LARGESETS_CONST_MAIN", "1"))   # large-set threshold
CONST_KLP = float(os.getenv("LARGESETS_CONST_KLP", "1"))     # single-design threshold
CONST_NORM = float(os.getenv("LARGESETS_CONST_NORM", "1"))   # norm constant M
CONST_I1 = float(os.getenv("LARGESETS_CONST_I1", "1"))       # I1 bound and the eps choice

# --- caps ---
INCIDENCE_CAP = int(os.getenv("LARGESETS_INCIDENCE_CAP", str(10**7)))   # rows of a dense incidence
EXACT_CAP = int(os.getenv("LARGESETS_EXACT_CAP", str(10**8)))           # l^|B| for exact enumeration
DESIGN_CAP = int(os.getenv("LARGESETS_DESIGN_CAP", str(10**5)))         # designs kept by max-disjoint

# --- sampling ---
DEFAULT_SEED = int(os.getenv("LARGESETS_SEED", "0"))
CHUNK_TRIALS = int(os.getenv("LARGESETS_CHUNK_TRIALS", "10000"))        # trials per seed stream

# --- search budgets ---
BUDGET_NODES = int(os.getenv("LARGESETS_BUDGET_NODES", str(5_000_000)))
BUDGET_SECONDS = float(os.getenv("LARGESETS_BUDGET_SECONDS", "300"))
RESTART_NODES = int(os.getenv("LARGESETS_RESTART_NODES", "20000"))


@dataclass(frozen=True)
class Constants:
    """The unspecified absolute constants, as used by one computation."""
    main: float = CONST_MAIN
    klp: float = CONST_KLP
    norm: float = CONST_NORM
    i1: float = CONST_I1

    def __post_init__(self):
        for name in ("main", "klp", "norm", "i1"):
            if not getattr(self, name) > 0:
                raise ValueError(f"constant {name} must be positive, got {getattr(self, name)}")

    def with_overrides(self, **values) -> "Constants":
        """Return a copy with the given constants replaced; None values are ignored."""
        return replace(self, **{k: v for k, v in values.items() if v is not None})

    def to_dict(self) -> dict:
        return {"main": self.main, "klp": self.klp, "norm": self.norm, "i1": self.i1}


def timestamp_for_filename():
    """Return a compact timestamp string suitable for filenames."""
    return datetime.now(timezone.utc).strftime("%Y%m%d_%H%M%S")


def log(message: str):
    """Append a timestamped line to the log file and echo it to stderr."""
    line = f"[{time.strftime('%Y-%m-%d %H:%M:%S')}] {message}"
    try:
        LOG_FILE.parent.mkdir(parents=True, exist_ok=True)
        with open(LOG_FILE, "a", encoding="utf-8") as f:
            f.write(line + "\n")
    except OSError:
        # read-only checkouts still get the echo
        pass
    if not QUIET:
        print(line, file=sys.stderr)
