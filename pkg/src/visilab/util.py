"""Shared numeric helpers: verdicts, jittered radius grids, canonical JSON/CSV output."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

PASS = "PASS"
FAIL = "FAIL"
INCONCLUSIVE = "INCONCLUSIVE"

DEFAULT_SEED = 20260809


def jittered_radii(rmin: float, rmax: float, per_decade: int = 16,
                   seed: int = DEFAULT_SEED, rel_jitter: float = 0.03) -> np.ndarray:
    """Log-spaced radius grid with a seeded multiplicative jitter.

    The jitter realizes the "for almost every r" clauses deterministically:
    the same (rmin, rmax, per_decade, seed) always yields the same grid.
    """
    if not (0 < rmin < rmax):
        raise ValueError("need 0 < rmin < rmax")
    decades = math.log10(rmax / rmin)
    k = max(2, int(round(decades * per_decade)) + 1)
    base = np.exp(np.linspace(math.log(rmin), math.log(rmax), k))
    rng = np.random.default_rng(seed)
    jit = 1.0 + rel_jitter * rng.uniform(-1.0, 1.0, size=k)
    radii = np.sort(base * jit)
    # keep the grid inside [rmin, rmax] so callers' window preconditions hold
    return np.clip(radii, rmin * (1 - rel_jitter), rmax)


def log_grid(lo: float, hi: float, per_level: int = 32) -> np.ndarray:
    """Log-spaced grid with per_level points per dyadic level over [lo, hi]."""
    if not (0 < lo < hi):
        raise ValueError("need 0 < lo < hi")
    levels = math.log2(hi / lo)
    k = max(2, int(math.ceil(levels * per_level)) + 1)
    return np.exp(np.linspace(math.log(lo), math.log(hi), k))


def trapezoid(y: np.ndarray, x: np.ndarray) -> float:
    return float(np.trapezoid(y, x))


def fnum(x) -> str:
    """Canonical text for a float (shortest round-trip repr)."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_json(path: str | Path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def write_csv(path: str | Path, header: list[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fnum(v) if not isinstance(v, str) else v for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def as_float_list(a) -> list[float]:
    return [float(v) for v in np.asarray(a).ravel()]
