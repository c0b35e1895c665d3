"""
Experiment configuration.

Config files are flat KEY=VALUE text files read with python-dotenv; command-line
overrides are applied afterwards (later wins). Angles are radians and may be
written as multiples of pi, e.g. ``3*pi/8``.
"""

import math
import os
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Dict, Mapping, Optional, Tuple

from dotenv import dotenv_values

from .errors import ConfigError
from .types import CANONICAL_PHI0, SpinKind

THREADS_ENV = "QCORR_THREADS"
LOG_DIR_ENV = "QCORR_LOG_DIR"
LOG_LEVEL_ENV = "QCORR_LOG_LEVEL"

DEFAULT_SEED = 20240101

# Canonical CHSH angles (a, a', b, b') per species
CANONICAL_CHSH_ANGLES = {
    SpinKind.PHOTON: (0.0, math.pi / 4, math.pi / 8, 3 * math.pi / 8),
    SpinKind.HALF: (0.0, math.pi / 2, math.pi / 4, 3 * math.pi / 4),
}

# Eight setting pairs: station A fixed at 0, station B stepping by pi/8
DEFAULT_SCHEDULE: Tuple[Tuple[float, float, float], ...] = tuple(
    (0.0, k * math.pi / 8, 1.0) for k in range(8)
)

SCHEDULE_MODES = ("cyclic", "random")
PHI_DISTRIBUTIONS = ("uniform", "constant")
OUTPUT_FORMATS = ("csv", "json")

ANGLE_PATTERN = re.compile(
    r"^\s*(?P<sign>[-+]?)\s*(?:(?P<num>\d+(?:\.\d*)?)\s*\*?\s*)?pi\s*(?:/\s*(?P<den>\d+(?:\.\d*)?))?\s*$",
    re.IGNORECASE,
)


def resolve_workers(requested: Optional[int] = None) -> int:
    """
    Worker thread count.

    Args:
        requested: Explicit count; None reads QCORR_THREADS (0 = auto)

    Returns:
        Positive thread count
    """
    if requested is None:
        raw = os.getenv(THREADS_ENV, "0")
        try:
            requested = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if requested < 0:
        raise ConfigError(f"Worker count must be >= 0, got {requested}")
    if requested == 0:
        return os.cpu_count() or 1
    return requested


def parse_angle(text: str) -> float:
    """
    Parse a radian angle: a float literal or a multiple of pi.

    Examples:
        "0.5" -> 0.5
        "pi/2" -> 1.5707963267948966
        "-3*pi/8" -> -1.1780972450961724
    """
    match = ANGLE_PATTERN.match(text)
    if match:
        num = float(match.group("num")) if match.group("num") else 1.0
        den = float(match.group("den")) if match.group("den") else 1.0
        value = num * math.pi / den
        return -value if match.group("sign") == "-" else value
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"Invalid angle: {text!r}. Expected radians or a multiple of pi") from None
    if not math.isfinite(value):
        raise ConfigError(f"Angle must be finite, got {text!r}")
    return value


def _parse_int(text: str) -> int:
    try:
        return int(text.replace("_", ""))
    except ValueError:
        raise ConfigError(f"Invalid integer: {text!r}") from None


def _parse_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"Invalid number: {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"Number must be finite, got {text!r}")
    return value


def _parse_species(text: str) -> SpinKind:
    try:
        return SpinKind.parse(text)
    except ValueError as e:
        raise ConfigError(str(e)) from None


def _parse_choice(choices: Tuple[str, ...]) -> Callable[[str], str]:
    def parse(text: str) -> str:
        value = text.strip().lower()
        if value not in choices:
            raise ConfigError(f"Invalid value {text!r}. Valid values: {list(choices)}")
        return value

    return parse


def parse_schedule(text: str) -> Tuple[Tuple[float, float, float], ...]:
    """
    Parse ``theta1:theta2[:weight]`` entries separated by commas.

    Example:
        "0:pi/8:1, 0:3*pi/8:2" -> ((0.0, 0.3927, 1.0), (0.0, 1.1781, 2.0))
    """
    entries = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) not in (2, 3):
            raise ConfigError(f"Invalid schedule entry {chunk!r}. Expected theta1:theta2[:weight]")
        weight = _parse_float(parts[2]) if len(parts) == 3 else 1.0
        if weight <= 0:
            raise ConfigError(f"Schedule weights must be positive, got {weight!r}")
        entries.append((parse_angle(parts[0]), parse_angle(parts[1]), weight))
    if not entries:
        raise ConfigError("Schedule is empty")
    return tuple(entries)


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters for every subcommand; each one validates the subset it reads."""

    species: SpinKind = SpinKind.PHOTON
    phi0: Optional[float] = None
    """Source phase offset (None = canonical for the species)"""

    # Setting scans
    grid_points: int = 1001
    grid_start: float = 0.0
    grid_stop: float = 2 * math.pi

    # CHSH angles (None = canonical for the species)
    a: Optional[float] = None
    a_prime: Optional[float] = None
    b: Optional[float] = None
    b_prime: Optional[float] = None

    # Monte Carlo
    n_pairs: int = 1_000_000
    seed: int = DEFAULT_SEED
    schedule: Tuple[Tuple[float, float, float], ...] = DEFAULT_SCHEDULE
    schedule_mode: str = "cyclic"
    phi_distribution: str = "uniform"

    # Double slit
    k: float = 1.0
    alpha: float = 1.0
    x0: float = 0.0
    dx_start: float = -2 * math.pi
    dx_stop: float = 2 * math.pi
    pattern_points: int = 1001

    # Hardy
    grid_density: int = 64
    dense_grid_density: int = 96
    refine_tolerance: float = 1e-10
    fit_budget: int = 400
    fit_starts: int = 32

    # Output
    out: Path = field(default_factory=lambda: Path("results"))
    format: str = "csv"

    @property
    def effective_phi0(self) -> float:
        return CANONICAL_PHI0[self.species] if self.phi0 is None else self.phi0

    @property
    def chsh_angles(self) -> Tuple[float, float, float, float]:
        defaults = CANONICAL_CHSH_ANGLES[self.species]
        given = (self.a, self.a_prime, self.b, self.b_prime)
        return tuple(d if g is None else g for g, d in zip(given, defaults))

    def validate_for(self, command: str) -> "ExperimentConfig":
        """Raise ConfigError if the parameters a subcommand reads are invalid."""
        if self.format not in OUTPUT_FORMATS:
            raise ConfigError(f"format must be one of {list(OUTPUT_FORMATS)}")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if command == "scan" and self.grid_points < 1:
            raise ConfigError(f"Scan grid is empty (grid_points={self.grid_points})")
        if command in ("scan", "chsh", "events") and self.n_pairs < 0:
            raise ConfigError(f"n_pairs must be >= 0, got {self.n_pairs}")
        if command in ("chsh", "events") and self.n_pairs < 1:
            raise ConfigError(f"n_pairs must be >= 1, got {self.n_pairs}")
        if command == "twoslit":
            if self.k <= 0 or self.alpha <= 0:
                raise ConfigError(f"k and alpha must be positive, got k={self.k}, alpha={self.alpha}")
            if self.pattern_points < 2:
                raise ConfigError("pattern_points must be >= 2")
            if self.dx_stop <= self.dx_start:
                raise ConfigError("dx_stop must exceed dx_start")
        if command == "hardy":
            if min(self.grid_density, self.dense_grid_density) < 8:
                raise ConfigError("grid densities must be >= 8")
            if self.refine_tolerance <= 0:
                raise ConfigError("refine_tolerance must be positive")
            if self.fit_budget < 1 or self.fit_starts < 1:
                raise ConfigError("fit_budget and fit_starts must be >= 1")
        return self

    def to_dict(self) -> Dict[str, object]:
        data = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, SpinKind):
                value = value.value
            elif isinstance(value, Path):
                value = str(value)
            elif isinstance(value, tuple):
                value = [list(v) for v in value]
            data[f.name] = value
        return data


_ANGLE_FIELDS = ("phi0", "grid_start", "grid_stop", "a", "a_prime", "b", "b_prime")

FIELD_PARSERS: Dict[str, Callable[[str], object]] = {
    "species": _parse_species,
    **{name: parse_angle for name in _ANGLE_FIELDS},
    "grid_points": _parse_int,
    "n_pairs": _parse_int,
    "seed": _parse_int,
    "schedule": parse_schedule,
    "schedule_mode": _parse_choice(SCHEDULE_MODES),
    "phi_distribution": _parse_choice(PHI_DISTRIBUTIONS),
    "k": _parse_float,
    "alpha": _parse_float,
    "x0": _parse_float,
    "dx_start": _parse_float,
    "dx_stop": _parse_float,
    "pattern_points": _parse_int,
    "grid_density": _parse_int,
    "dense_grid_density": _parse_int,
    "refine_tolerance": _parse_float,
    "fit_budget": _parse_int,
    "fit_starts": _parse_int,
    "out": Path,
    "format": _parse_choice(OUTPUT_FORMATS),
}


def apply_overrides(config: ExperimentConfig, values: Mapping[str, Optional[str]]) -> ExperimentConfig:
    """Return a copy of config with string values parsed and applied in order."""
    updates = {}
    for raw_key, raw_value in values.items():
        key = raw_key.strip().lower().replace("-", "_")
        if key not in FIELD_PARSERS:
            raise ConfigError(f"Unknown config key {raw_key!r}")
        if raw_value is None or raw_value.strip() == "":
            raise ConfigError(f"Config key {raw_key!r} has no value")
        updates[key] = FIELD_PARSERS[key](raw_value.strip())
    return replace(config, **updates)


def load_config(
    path: Optional[Path] = None, overrides: Optional[Mapping[str, Optional[str]]] = None
) -> ExperimentConfig:
    """
    Build an ExperimentConfig from defaults, an optional config file and overrides.

    Args:
        path: Flat KEY=VALUE file (python-dotenv syntax); None skips the file
        overrides: Command-line values applied after the file

    Returns:
        Parsed (not yet command-validated) configuration
    """
    config = ExperimentConfig()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"Config file not found: {path}")
        config = apply_overrides(config, dotenv_values(path))
    if overrides:
        config = apply_overrides(config, overrides)
    return config
