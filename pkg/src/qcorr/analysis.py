"""
Setting scans, CHSH statistics and fringe visibility.

Pure functions over the amplitude model, the QM oracle and event-engine
estimates; results are plain dataclasses with dict/CSV exports.
"""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .amplitude import bell_correlation
from .errors import DomainError
from .events import (
    RunConfig,
    coincidence_match,
    estimate_by_setting,
    lhv_run,
    run_events,
    simulate_matched,
    station_streams,
)
from .oracle import correlation_qm, state_for_species
from .types import PairSpec

CLASSICAL_BOUND = 2.0
ALGEBRAIC_BOUND = 4.0
TSIRELSON_BOUND = 2.0 * math.sqrt(2.0)

CorrelationSource = Union[Callable[[float, float], float], Mapping[Tuple[float, float], float]]


@dataclass(frozen=True)
class ChshSettings:
    a: float
    a_prime: float
    b: float
    b_prime: float

    def __post_init__(self):
        for name in ("a", "a_prime", "b", "b_prime"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"CHSH setting {name} must be finite")

    def pairs(self) -> Tuple[Tuple[float, float], ...]:
        """(a,b), (a,b'), (a',b), (a',b') in the order the statistic combines them."""
        return (
            (self.a, self.b),
            (self.a, self.b_prime),
            (self.a_prime, self.b),
            (self.a_prime, self.b_prime),
        )

    def to_dict(self) -> Dict[str, float]:
        return {"a": self.a, "a_prime": self.a_prime, "b": self.b, "b_prime": self.b_prime}


@dataclass
class ChshResult:
    settings: ChshSettings
    correlations: Tuple[float, float, float, float]
    S: float
    stderr: Optional[float] = None
    n_per_pair: Optional[int] = None

    @property
    def bound_violated(self) -> bool:
        return self.S > CLASSICAL_BOUND

    def to_dict(self) -> Dict[str, object]:
        labels = ("P(a,b)", "P(a,b')", "P(a',b)", "P(a',b')")
        data = {
            "settings": self.settings.to_dict(),
            "per_pair_P": dict(zip(labels, self.correlations)),
            "S": self.S,
            "bound_violated": self.bound_violated,
        }
        if self.stderr is not None:
            data["stderr"] = self.stderr
            data["n_per_pair"] = self.n_per_pair
        return data


@dataclass(eq=False)
class ScanReport:
    """Model vs oracle (and optionally Monte Carlo) over a grid of relative angles."""

    dtheta: np.ndarray
    model_P: np.ndarray
    oracle_E: np.ndarray
    mc_P: np.ndarray
    abs_diff: np.ndarray = field(default=None)

    def __post_init__(self):
        lengths = {a.size for a in (self.dtheta, self.model_P, self.oracle_E, self.mc_P)}
        if len(lengths) != 1:
            raise DomainError(f"Scan columns differ in length: {sorted(lengths)}")
        self.abs_diff = np.abs(self.model_P - self.oracle_E)

    def __len__(self) -> int:
        return int(self.dtheta.size)

    @property
    def max_abs_diff(self) -> float:
        return float(self.abs_diff.max()) if len(self) else 0.0


def _lookup(source: CorrelationSource, theta1: float, theta2: float) -> float:
    if callable(source):
        value = source(theta1, theta2)
    else:
        try:
            value = source[(theta1, theta2)]
        except KeyError:
            raise DomainError(f"Missing correlation for settings ({theta1!r}, {theta2!r})") from None
    if value is None or not math.isfinite(value):
        raise DomainError(f"Missing correlation for settings ({theta1!r}, {theta2!r})")
    if abs(value) > 1.0 + 1e-12:
        raise DomainError(f"Correlation {value!r} outside [-1, 1]")
    return float(value)


def chsh_statistic(P: CorrelationSource, settings: ChshSettings) -> float:
    """
    S = |P(a,b) - P(a,b') + P(a',b) + P(a',b')|.

    Args:
        P: Correlation as a function of (theta1, theta2) or a table keyed by the pair
        settings: The four analyzer angles
    """
    values = [_lookup(P, t1, t2) for t1, t2 in settings.pairs()]
    S = abs(values[0] - values[1] + values[2] + values[3])
    if S > ALGEBRAIC_BOUND + 1e-12:
        raise DomainError(f"CHSH value {S!r} exceeds the algebraic bound")
    return S


def chsh_analytic(spec: PairSpec, settings: ChshSettings) -> ChshResult:
    """CHSH of the amplitude model evaluated in closed form."""

    def model(theta1: float, theta2: float) -> float:
        return bell_correlation(theta1, theta2, spec)

    correlations = tuple(model(t1, t2) for t1, t2 in settings.pairs())
    return ChshResult(settings=settings, correlations=correlations, S=chsh_statistic(model, settings))


def _chsh_from_events(events, settings: ChshSettings, n_per_pair: int) -> ChshResult:
    matched = coincidence_match(*station_streams(events))
    table = {(e.theta1, e.theta2): e for e in estimate_by_setting(matched)}
    correlations = tuple(table[pair].p_hat for pair in settings.pairs())
    stderr = math.sqrt(sum(table[pair].stderr ** 2 for pair in settings.pairs()))
    S = chsh_statistic({pair: table[pair].p_hat for pair in settings.pairs()}, settings)
    return ChshResult(settings, correlations, S, stderr=stderr, n_per_pair=n_per_pair)


def _chsh_run_config(spec: PairSpec, settings: ChshSettings, n_per_pair: int, seed: int) -> RunConfig:
    return RunConfig.from_tuples(
        seed=seed,
        n_pairs=4 * n_per_pair,
        schedule=[(t1, t2, 1.0) for t1, t2 in settings.pairs()],
        spec=spec,
    )


def chsh_monte_carlo(
    spec: PairSpec, settings: ChshSettings, n_per_pair: int, seed: int, workers: Optional[int] = None
) -> ChshResult:
    """CHSH estimated from simulated, tag-matched amplitude-model events."""
    config = _chsh_run_config(spec, settings, n_per_pair, seed)
    return _chsh_from_events(run_events(config, workers=workers), settings, n_per_pair)


def chsh_lhv(
    spec: PairSpec, settings: ChshSettings, n_per_pair: int, seed: int, workers: Optional[int] = None
) -> ChshResult:
    """CHSH of the deterministic local hidden-variable baseline."""
    config = _chsh_run_config(spec, settings, n_per_pair, seed)
    return _chsh_from_events(lhv_run(config, workers=workers), settings, n_per_pair)


def chsh_report(
    analytic: ChshResult,
    monte_carlo: Optional[ChshResult] = None,
    lhv: Optional[ChshResult] = None,
) -> Dict[str, object]:
    """JSON payload for the chsh command: analytic model, plus MC model and LHV baseline when run."""
    report: Dict[str, object] = {
        **analytic.to_dict(),
        "classical_bound": CLASSICAL_BOUND,
        "tsirelson_bound": TSIRELSON_BOUND,
    }
    if monte_carlo is not None:
        report["monte_carlo"] = monte_carlo.to_dict()
    if lhv is not None:
        report["lhv_baseline"] = lhv.to_dict()
    return report


def scan_settings(
    spec: PairSpec,
    grid: Sequence[float],
    n_pairs: int = 0,
    seed: int = 0,
    workers: Optional[int] = None,
) -> ScanReport:
    """
    Tabulate model P, oracle E and (when n_pairs > 0) a Monte Carlo estimate.

    Each grid value is a relative angle dtheta, evaluated at theta1 = dtheta,
    theta2 = 0. Monte Carlo pairs are spread cyclically over the grid points.
    """
    dtheta = np.asarray(grid, dtype=float).reshape(-1)
    if dtheta.size == 0:
        raise DomainError("Scan grid is empty")
    state = state_for_species(spec.species)
    model_P = np.array([bell_correlation(float(d), 0.0, spec) for d in dtheta])
    oracle_E = np.array([correlation_qm(state, spec.species, float(d), 0.0) for d in dtheta])

    mc_P = np.full(dtheta.size, np.nan)
    if n_pairs > 0:
        config = RunConfig.from_tuples(
            seed=seed, n_pairs=n_pairs, schedule=[(float(d), 0.0, 1.0) for d in dtheta], spec=spec
        )
        estimates = {e.theta1: e.p_hat for e in estimate_by_setting(simulate_matched(config, workers))}
        mc_P = np.array([estimates.get(float(d), np.nan) for d in dtheta])

    return ScanReport(dtheta=dtheta, model_P=model_P, oracle_E=oracle_E, mc_P=mc_P)


def load_scan_report(path: Path) -> ScanReport:
    """Read a scan CSV; abs_diff is recomputed from the model and oracle columns."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    if rows and set(rows[0]) != {"dtheta_rad", "model_P", "oracle_E", "mc_P", "abs_diff"}:
        raise DomainError(f"Unexpected scan CSV header in {path}")

    def column(name: str) -> np.ndarray:
        return np.array([float(r[name]) if r[name] else np.nan for r in rows], dtype=float)

    return ScanReport(
        dtheta=column("dtheta_rad"),
        model_P=column("model_P"),
        oracle_E=column("oracle_E"),
        mc_P=column("mc_P"),
    )


@dataclass(frozen=True)
class CosineFringe:
    """Closed-form fringe offset + amplitude * cos(2 pi x / period)."""

    offset: float
    amplitude: float
    period: float = 2.0 * math.pi

    def __call__(self, x):
        return self.offset + self.amplitude * np.cos(2.0 * math.pi * np.asarray(x) / self.period)

    def extrema(self) -> Tuple[float, float]:
        return self.offset + abs(self.amplitude), self.offset - abs(self.amplitude)


def visibility(pattern: Union[CosineFringe, Sequence[float], np.ndarray]) -> float:
    """
    Fringe visibility (max - min) / (max + min).

    A CosineFringe is evaluated from its analytic extrema; anything else is taken
    as dense samples of a nonnegative pattern.
    """
    if isinstance(pattern, CosineFringe):
        high, low = pattern.extrema()
    else:
        samples = np.asarray(pattern, dtype=float)
        if samples.size == 0:
            raise DomainError("Pattern has no samples")
        high, low = float(samples.max()), float(samples.min())
    if low < 0.0:
        raise DomainError(f"Pattern must be nonnegative, minimum is {low!r}")
    if high + low == 0.0:
        raise DomainError("Visibility is undefined for an all-zero pattern")
    return (high - low) / (high + low)
