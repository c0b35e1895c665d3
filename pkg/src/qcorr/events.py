"""
Seeded Monte Carlo generation of two-station measurement events.

Pairs are produced in fixed blocks of BLOCK_SIZE pair ids. Every block draws
from its own counter-based (Philox) substream keyed by (seed, block, purpose),
so a run is identical whether blocks are processed serially or by a pool.

Outcome pairs are sampled jointly from the amplitude model's distribution;
the per-station streams then expose only local data (tag, setting, outcome)
and are correlated afterwards by tag, like time stamps compared over a
classical channel.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .amplitude import bell_correlation, pair_correlation
from .config import resolve_workers
from .errors import DomainError, IntegrityError
from .types import OUTCOME_PAIRS, AnalyzerSetting, PairSpec, check_finite

logger = logging.getLogger("qcorr.events")

BLOCK_SIZE = 65_536
TWO_PI = 2.0 * math.pi
# Largest double strictly below 2 pi
_PHI_MAX = float(np.nextafter(TWO_PI, 0.0))
# Slots per schedule entry in a weighted cycle
WEIGHTED_CYCLE_RESOLUTION = 256

# Substream purposes
STREAM_PHI = 0
STREAM_OUTCOME = 1
STREAM_SCHEDULE = 2
STREAM_LHV = 3


@dataclass(frozen=True)
class ScheduledSetting:
    theta1: float
    theta2: float
    weight: float = 1.0

    def __post_init__(self):
        check_finite(theta1=self.theta1, theta2=self.theta2, weight=self.weight)
        if self.weight <= 0:
            raise DomainError(f"Schedule weight must be positive, got {self.weight!r}")


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a run; identical configs give identical events."""

    seed: int
    n_pairs: int
    settings_schedule: Tuple[ScheduledSetting, ...]
    spec: PairSpec
    schedule_mode: str = "cyclic"
    phi_distribution: str = "uniform"

    def __post_init__(self):
        if self.n_pairs < 0:
            raise DomainError(f"n_pairs must be >= 0, got {self.n_pairs}")
        if not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not self.settings_schedule:
            raise DomainError("Settings schedule is empty")
        if self.schedule_mode not in ("cyclic", "random"):
            raise DomainError(f"Unknown schedule mode {self.schedule_mode!r}")
        if self.phi_distribution not in ("uniform", "constant"):
            raise DomainError(f"Unknown phi distribution {self.phi_distribution!r}")
        object.__setattr__(self, "settings_schedule", tuple(self.settings_schedule))

    @classmethod
    def from_tuples(
        cls,
        seed: int,
        n_pairs: int,
        schedule: Sequence[Tuple[float, ...]],
        spec: PairSpec,
        **kwargs,
    ) -> "RunConfig":
        return cls(
            seed=seed,
            n_pairs=n_pairs,
            settings_schedule=tuple(ScheduledSetting(*entry) for entry in schedule),
            spec=spec,
            **kwargs,
        )

    @property
    def n_blocks(self) -> int:
        return -(-self.n_pairs // BLOCK_SIZE)

    def block_bounds(self, block: int) -> Tuple[int, int]:
        start = block * BLOCK_SIZE
        return start, min(start + BLOCK_SIZE, self.n_pairs)


@dataclass(frozen=True)
class PairRecord:
    pair_id: int
    phi: float
    spec: PairSpec


@dataclass(frozen=True)
class StationEvent:
    station: str
    pair_tag: int
    setting: AnalyzerSetting
    outcome: int


@dataclass(eq=False)
class EventTable:
    """
    Columnar record of a run: one row per pair, both stations' data.

    phi is the per-pair hidden variable: the internal phase for the amplitude
    model, lambda for the LHV baseline. It never reaches the station streams.
    """

    pair_tag: np.ndarray
    theta1: np.ndarray
    theta2: np.ndarray
    a: np.ndarray
    b: np.ndarray
    phi: np.ndarray

    def __len__(self) -> int:
        return int(self.pair_tag.size)

    @classmethod
    def concatenate(cls, tables: Sequence["EventTable"]) -> "EventTable":
        if not tables:
            return cls.empty()
        return cls(
            pair_tag=np.concatenate([t.pair_tag for t in tables]),
            theta1=np.concatenate([t.theta1 for t in tables]),
            theta2=np.concatenate([t.theta2 for t in tables]),
            a=np.concatenate([t.a for t in tables]),
            b=np.concatenate([t.b for t in tables]),
            phi=np.concatenate([t.phi for t in tables]),
        )

    @classmethod
    def empty(cls) -> "EventTable":
        return cls(
            pair_tag=np.empty(0, dtype=np.int64),
            theta1=np.empty(0),
            theta2=np.empty(0),
            a=np.empty(0, dtype=np.int8),
            b=np.empty(0, dtype=np.int8),
            phi=np.empty(0),
        )


@dataclass(eq=False)
class StationStream:
    """Local view of one station: tags, its own settings and outcomes only."""

    station: str
    pair_tag: np.ndarray
    setting: np.ndarray
    outcome: np.ndarray

    def __len__(self) -> int:
        return int(self.pair_tag.size)

    def take(self, indices) -> "StationStream":
        """Subset or reorder the stream (index array or boolean mask)."""
        return StationStream(
            station=self.station,
            pair_tag=self.pair_tag[indices],
            setting=self.setting[indices],
            outcome=self.outcome[indices],
        )

    def events(self) -> Iterator[StationEvent]:
        for tag, setting, outcome in zip(self.pair_tag, self.setting, self.outcome):
            yield StationEvent(self.station, int(tag), AnalyzerSetting(float(setting)), int(outcome))


@dataclass(eq=False)
class MatchedPairs:
    """Tag-joined outcomes, sorted by tag, plus the tags seen at only one station."""

    pair_tag: np.ndarray
    theta1: np.ndarray
    theta2: np.ndarray
    a: np.ndarray
    b: np.ndarray
    unmatched_a: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    unmatched_b: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __len__(self) -> int:
        return int(self.pair_tag.size)

    @property
    def n_unmatched(self) -> int:
        return int(self.unmatched_a.size + self.unmatched_b.size)


@dataclass(frozen=True)
class SettingEstimate:
    theta1: float
    theta2: float
    n: int
    p_hat: float
    stderr: float
    rate_a_plus: float
    rate_b_plus: float


# ---------------------------------------------------------------------------
# Random substreams and schedules
# ---------------------------------------------------------------------------


def _block_rng(seed: int, block: int, purpose: int) -> np.random.Generator:
    sequence = np.random.SeedSequence(seed, spawn_key=(block, purpose))
    return np.random.Generator(np.random.Philox(sequence))


def _phi_block(config: RunConfig, block: int) -> np.ndarray:
    start, stop = config.block_bounds(block)
    if config.phi_distribution == "constant":
        return np.zeros(stop - start)
    phi = _block_rng(config.seed, block, STREAM_PHI).random(stop - start) * TWO_PI
    return np.minimum(phi, _PHI_MAX)


def _outcome_draws(config: RunConfig, block: int) -> np.ndarray:
    start, stop = config.block_bounds(block)
    return _block_rng(config.seed, block, STREAM_OUTCOME).random(stop - start)


def _cumulative_weights(schedule: Sequence[ScheduledSetting]) -> np.ndarray:
    weights = np.array([s.weight for s in schedule], dtype=float)
    cumulative = np.cumsum(weights) / weights.sum()
    cumulative[-1] = 1.0
    return cumulative


def _schedule_indices(config: RunConfig, block: int) -> np.ndarray:
    """Index into the schedule for every pair of a block."""
    start, stop = config.block_bounds(block)
    schedule = config.settings_schedule
    if config.schedule_mode == "random":
        u = _block_rng(config.seed, block, STREAM_SCHEDULE).random(stop - start)
    else:
        equal = len({s.weight for s in schedule}) == 1
        period = len(schedule) * (1 if equal else WEIGHTED_CYCLE_RESOLUTION)
        ids = np.arange(start, stop, dtype=np.int64)
        u = ((ids % period) + 0.5) / period
    indices = np.searchsorted(_cumulative_weights(schedule), u, side="right")
    return np.minimum(indices, len(schedule) - 1)


def _thresholds(U):
    # Cumulative p(++), p(+-), p(-+) with the equal within-class split; floats or arrays
    coinc = U * U
    anti = 1.0 - coinc
    c1 = coinc / 2.0
    c2 = c1 + anti / 2.0
    c3 = c2 + anti / 2.0
    return c1, c2, c3


# ---------------------------------------------------------------------------
# Scalar path
# ---------------------------------------------------------------------------


def generate_pairs(config: RunConfig) -> Iterator[PairRecord]:
    """
    Stream of pairs with their internal phase samples.

    Deterministic given the seed; phi is uniform on [0, 2 pi) or constant 0.
    n_pairs = 0 yields nothing.
    """
    for block in range(config.n_blocks):
        start, _ = config.block_bounds(block)
        for offset, phi in enumerate(_phi_block(config, block)):
            yield PairRecord(pair_id=start + offset, phi=float(phi), spec=config.spec)


def measure_pair(
    pair: PairRecord, theta1: float, theta2: float, rng_draw: float
) -> Tuple[int, int]:
    """
    Sample one outcome pair from the model distribution with a uniform draw.

    U is built from the two particles' local phases, which carry the pair's
    internal phase; it cancels, so the distribution depends only on
    theta1 - theta2 + phi0.
    """
    check_finite(theta1=theta1, theta2=theta2, rng_draw=rng_draw)
    c1, c2, c3 = _thresholds(pair_correlation(theta1, theta2, pair.phi, pair.spec))
    index = (rng_draw >= c1) + (rng_draw >= c2) + (rng_draw >= c3)
    return OUTCOME_PAIRS[int(index)]


def iter_events(config: RunConfig) -> Iterator[Tuple[PairRecord, float, float, int, int]]:
    """Pair-by-pair run; yields (pair, theta1, theta2, a, b). Matches run_events exactly."""
    pairs = generate_pairs(config)
    for block in range(config.n_blocks):
        draws = _outcome_draws(config, block)
        indices = _schedule_indices(config, block)
        for u, k in zip(draws, indices):
            pair = next(pairs)
            setting = config.settings_schedule[int(k)]
            a, b = measure_pair(pair, setting.theta1, setting.theta2, float(u))
            yield pair, setting.theta1, setting.theta2, a, b


# ---------------------------------------------------------------------------
# Vectorised path
# ---------------------------------------------------------------------------


def _measure_block(config: RunConfig, block: int) -> EventTable:
    start, stop = config.block_bounds(block)
    schedule = config.settings_schedule
    indices = _schedule_indices(config, block)
    draws = _outcome_draws(config, block)
    phi = _phi_block(config, block)

    theta1 = np.array([s.theta1 for s in schedule])[indices]
    theta2 = np.array([s.theta2 for s in schedule])[indices]
    c1, c2, c3 = _thresholds(pair_correlation(theta1, theta2, phi, config.spec))
    outcome_index = (draws >= c1).astype(np.int8) + (draws >= c2) + (draws >= c3)

    pairs = np.array(OUTCOME_PAIRS, dtype=np.int8)
    return EventTable(
        pair_tag=np.arange(start, stop, dtype=np.int64),
        theta1=theta1,
        theta2=theta2,
        a=pairs[outcome_index, 0],
        b=pairs[outcome_index, 1],
        phi=phi,
    )


def _run_blocks(config: RunConfig, measure, workers: Optional[int]) -> EventTable:
    if config.n_pairs == 0:
        return EventTable.empty()
    with ThreadPoolExecutor(max_workers=resolve_workers(workers)) as pool:
        tables = list(pool.map(lambda block: measure(config, block), range(config.n_blocks)))
    return EventTable.concatenate(tables)


def run_events(config: RunConfig, workers: Optional[int] = None) -> EventTable:
    """Vectorised run of the amplitude-model engine over all pairs."""
    table = _run_blocks(config, _measure_block, workers)
    logger.info(
        f"Generated {len(table)} pair events",
        extra={"input_params": {"seed": config.seed, "n_pairs": config.n_pairs}},
    )
    return table


# ---------------------------------------------------------------------------
# Local hidden-variable baseline
# ---------------------------------------------------------------------------


def lhv_baseline_measure(lam: float, theta: float) -> int:
    """Deterministic local response sign(cos(theta - lambda)), with sign(0) = +1."""
    check_finite(lam=lam, theta=theta)
    return 1 if math.cos(theta - lam) >= 0.0 else -1


def _lhv_block(config: RunConfig, block: int) -> EventTable:
    start, stop = config.block_bounds(block)
    schedule = config.settings_schedule
    indices = _schedule_indices(config, block)
    lam = _block_rng(config.seed, block, STREAM_LHV).random(stop - start) * TWO_PI
    theta1 = np.array([s.theta1 for s in schedule])[indices]
    theta2 = np.array([s.theta2 for s in schedule])[indices]
    return EventTable(
        pair_tag=np.arange(start, stop, dtype=np.int64),
        theta1=theta1,
        theta2=theta2,
        a=np.where(np.cos(theta1 - lam) >= 0.0, 1, -1).astype(np.int8),
        b=np.where(np.cos(theta2 - lam) >= 0.0, 1, -1).astype(np.int8),
        phi=lam,
    )


def lhv_run(config: RunConfig, workers: Optional[int] = None) -> EventTable:
    """Run the LHV baseline: one shared uniform lambda per pair, same rule at both stations."""
    return _run_blocks(config, _lhv_block, workers)


# ---------------------------------------------------------------------------
# Station streams and coincidence matching
# ---------------------------------------------------------------------------


def station_streams(events: EventTable) -> Tuple[StationStream, StationStream]:
    """Split a run into the two stations' local records."""
    stream_a = StationStream("A", events.pair_tag.copy(), events.theta1.copy(), events.a.copy())
    stream_b = StationStream("B", events.pair_tag.copy(), events.theta2.copy(), events.b.copy())
    return stream_a, stream_b


def _require_unique(stream: StationStream) -> None:
    unique, counts = np.unique(stream.pair_tag, return_counts=True)
    if unique.size != stream.pair_tag.size:
        duplicates = unique[counts > 1][:5].tolist()
        raise IntegrityError(f"Duplicate pair tags at station {stream.station}: {duplicates}")


def coincidence_match(stream_a: StationStream, stream_b: StationStream) -> MatchedPairs:
    """
    Join the two station streams by pair tag.

    Every tag present at both stations yields exactly one matched record (sorted
    by tag, so input order is irrelevant); tags seen at one station only are
    reported as unmatched.
    """
    _require_unique(stream_a)
    _require_unique(stream_b)
    tags, ia, ib = np.intersect1d(
        stream_a.pair_tag, stream_b.pair_tag, assume_unique=True, return_indices=True
    )
    matched = MatchedPairs(
        pair_tag=tags,
        theta1=stream_a.setting[ia],
        theta2=stream_b.setting[ib],
        a=stream_a.outcome[ia],
        b=stream_b.outcome[ib],
        unmatched_a=np.setdiff1d(stream_a.pair_tag, tags, assume_unique=True),
        unmatched_b=np.setdiff1d(stream_b.pair_tag, tags, assume_unique=True),
    )
    if matched.n_unmatched:
        logger.warning(
            f"{matched.n_unmatched} unmatched tags",
            extra={"output_data": {"A": matched.unmatched_a[:10].tolist(), "B": matched.unmatched_b[:10].tolist()}},
        )
    return matched


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------


def estimate_bell_correlation(matched: MatchedPairs) -> float:
    """P_hat = (N_coinc - N_anti) / N, the mean outcome product."""
    if len(matched) == 0:
        raise DomainError("Cannot estimate a correlation from zero matched pairs")
    products = matched.a.astype(np.int64) * matched.b.astype(np.int64)
    return float(products.sum() / products.size)


def _setting_groups(matched: MatchedPairs) -> Tuple[np.ndarray, np.ndarray]:
    keys = np.stack([matched.theta1, matched.theta2], axis=1)
    return np.unique(keys, axis=0, return_inverse=True)


def estimate_by_setting(matched: MatchedPairs) -> List[SettingEstimate]:
    """P_hat, standard error and per-station +1 rates for each setting pair, sorted by angles."""
    if len(matched) == 0:
        raise DomainError("Cannot estimate correlations from zero matched pairs")
    keys, inverse = _setting_groups(matched)
    inverse = inverse.reshape(-1)
    products = matched.a.astype(np.int64) * matched.b.astype(np.int64)
    estimates = []
    for k, (theta1, theta2) in enumerate(keys):
        mask = inverse == k
        n = int(mask.sum())
        p_hat = float(products[mask].sum() / n)
        estimates.append(
            SettingEstimate(
                theta1=float(theta1),
                theta2=float(theta2),
                n=n,
                p_hat=p_hat,
                stderr=math.sqrt(max(0.0, 1.0 - p_hat * p_hat) / n),
                rate_a_plus=float((matched.a[mask] == 1).sum() / n),
                rate_b_plus=float((matched.b[mask] == 1).sum() / n),
            )
        )
    return estimates


def station_marginals(matched: MatchedPairs) -> Dict[Tuple[float, float], Tuple[float, float]]:
    """Empirical +1 rate at A and at B for each setting pair."""
    return {
        (e.theta1, e.theta2): (e.rate_a_plus, e.rate_b_plus) for e in estimate_by_setting(matched)
    }


def model_correlation_at(estimate: SettingEstimate, spec: PairSpec) -> float:
    return bell_correlation(estimate.theta1, estimate.theta2, spec)


def simulate_matched(config: RunConfig, workers: Optional[int] = None) -> MatchedPairs:
    """Full protocol: run, split into station streams, match by tag."""
    return coincidence_match(*station_streams(run_events(config, workers)))
