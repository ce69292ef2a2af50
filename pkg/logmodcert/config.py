"""
Run configuration and numeric tolerances.

Tolerances are module globals read at call time, so a run can rebind them
once at start-up (``apply_tolerance_overrides``) and every module sees the
new values.
"""

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from logmodcert.errors import ConfigError

log = logging.getLogger(__name__)

EPS_GEO = 1e-10   # geometric tolerance (membership, contact, length slack)
ORTHO_TOL = 1e-12  # orthonormality of flat direction bases
RANK_TOL = 1e-9    # rank tests (parallel / skew classification)

TOLERANCE_KEYS = {"eps_geo": "EPS_GEO", "ortho_tol": "ORTHO_TOL", "rank_tol": "RANK_TOL"}
SUBCOMMAND_BLOCKS = ("chain", "logmod", "blowup", "budget", "lab")
TOP_LEVEL_KEYS = {"seed", "tolerances", "out", "threads"} | set(SUBCOMMAND_BLOCKS)

SEED_MASK = (1 << 64) - 1


# ==========================================
# TOLERANCES
# ==========================================
def apply_tolerance_overrides(overrides: Dict[str, float]) -> None:
    for key, value in overrides.items():
        if key not in TOLERANCE_KEYS:
            raise ConfigError(f"❌ Unknown tolerance '{key}' (known: {', '.join(sorted(TOLERANCE_KEYS))})")
        value = float(value)
        if not value > 0:
            raise ConfigError(f"❌ Tolerance '{key}' must be positive, got {value}")
        globals()[TOLERANCE_KEYS[key]] = value
        log.debug(f"tolerance {key} set to {value}")


def current_tolerances() -> Dict[str, float]:
    return {key: globals()[name] for key, name in sorted(TOLERANCE_KEYS.items())}


def resolve_threads(requested: Optional[int] = None) -> int:
    if requested is not None:
        threads = int(requested)
    elif os.getenv("LOGMOD_THREADS"):
        try:
            threads = int(os.environ["LOGMOD_THREADS"])
        except ValueError:
            raise ConfigError(f"❌ LOGMOD_THREADS must be an integer, got '{os.environ['LOGMOD_THREADS']}'")
    else:
        threads = os.cpu_count() or 1
    if threads < 1:
        raise ConfigError(f"❌ Worker pool size must be >= 1, got {threads}")
    return threads


# ==========================================
# RUN CONFIG
# ==========================================
@dataclass
class RunConfig:
    seed: int = 0
    tolerances: Dict[str, float] = field(default_factory=dict)
    out: str = "."
    threads: Optional[int] = None
    params: Dict[str, Dict[str, Any]] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("❌ Config root must be a JSON object")
        unknown = sorted(set(raw) - TOP_LEVEL_KEYS)
        if unknown:
            raise ConfigError(f"❌ Unknown config keys: {', '.join(unknown)}")
        tolerances = dict(raw.get("tolerances", {}))
        bad = sorted(set(tolerances) - set(TOLERANCE_KEYS))
        if bad:
            raise ConfigError(f"❌ Unknown tolerance keys: {', '.join(bad)}")
        params = {}
        for block in SUBCOMMAND_BLOCKS:
            if block in raw:
                if not isinstance(raw[block], dict):
                    raise ConfigError(f"❌ Config block '{block}' must be an object")
                params[block] = dict(raw[block])
        seed = raw.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ConfigError(f"❌ Seed must be an integer, got {seed!r}")
        return cls(
            seed=seed & SEED_MASK,
            tolerances=tolerances,
            out=str(raw.get("out", ".")),
            threads=raw.get("threads"),
            params=params,
        )

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        try:
            with open(path, "r", encoding="utf-8") as f:
                raw = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"❌ Config file {path} is not valid JSON: {e}")
        return cls.from_dict(raw)

    def block(self, name: str) -> Dict[str, Any]:
        return self.params.get(name, {})

    def merged(self, block: str, flags: Dict[str, Any]) -> Dict[str, Any]:
        """Parameter block with explicitly given flags (non-None) on top."""
        merged = dict(self.block(block))
        merged.update({k: v for k, v in flags.items() if v is not None})
        return merged
