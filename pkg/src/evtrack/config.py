"""Run configuration: every tunable in one place.

Precedence when assembling a config: built-in defaults, then a flat
``key=value`` config file, then command-line flags.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .errors import InvalidParameter
from .events import DEFAULT_STEP_US, DEFAULT_T_A_US, SensorGeometry, VGA


@dataclass(frozen=True)
class RunConfig:
    t_a_us: int = DEFAULT_T_A_US
    step_us: int = DEFAULT_STEP_US
    t_start_us: int = 0
    eps: float = 15.0
    min_pts_full: int = 225
    min_pts_partial: int = 45
    sigma_px: float = 30.0
    t_match_px: float = 30.0
    px_per_cm: float = 2.46
    geometry: SensorGeometry = VGA
    seed: int = 0
    latency_us: int = 0

    def __post_init__(self):
        if self.t_a_us <= 0 or self.step_us <= 0:
            raise InvalidParameter("t_a_us and step_us must be positive")
        for name in ("eps", "sigma_px", "t_match_px", "px_per_cm"):
            if getattr(self, name) <= 0:
                raise InvalidParameter(f"{name} must be positive")
        if self.min_pts_full < 1 or self.min_pts_partial < 1:
            raise InvalidParameter("min_pts values must be >= 1")


_INT_KEYS = {"t_a_us", "step_us", "t_start_us", "min_pts_full", "min_pts_partial", "seed", "latency_us"}
_FLOAT_KEYS = {"eps", "sigma_px", "t_match_px", "px_per_cm"}


def parse_geometry(text: str) -> SensorGeometry:
    try:
        w, h = text.lower().split("x")
        return SensorGeometry(int(w), int(h))
    except (ValueError, AttributeError):
        raise InvalidParameter(f"geometry must look like 640x480, got {text!r}") from None


def load_config_file(path) -> dict:
    """Flat key=value lines; '#' starts a comment."""
    out = {}
    with open(path, "r", encoding="utf-8") as f:
        for i, ln in enumerate(f, 1):
            ln = ln.split("#", 1)[0].strip()
            if not ln:
                continue
            if "=" not in ln:
                raise InvalidParameter(f"{path}:{i}: expected key=value, got {ln!r}")
            key, value = (part.strip() for part in ln.split("=", 1))
            out[key] = value
    return out


def build_config(file_values: dict | None = None, **flag_values) -> RunConfig:
    """Merge defaults < config file < explicit flags into a RunConfig."""
    cfg = RunConfig()
    merged = {}
    valid = {f.name for f in fields(RunConfig)}
    for source in (file_values or {}), flag_values:
        for key, value in source.items():
            if value is None:
                continue
            if key not in valid:
                raise InvalidParameter(f"unknown config key {key!r}")
            if key == "geometry" and not isinstance(value, SensorGeometry):
                value = parse_geometry(str(value))
            elif key in _INT_KEYS:
                value = int(value)
            elif key in _FLOAT_KEYS:
                value = float(value)
            merged[key] = value
    return replace(cfg, **merged)
