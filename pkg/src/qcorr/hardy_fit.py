"""
Fit local complex amplitudes to the four Hardy joint probabilities.

Each analyzer setting carries one local amplitude per outcome,

    C(setting, +) = r exp(i (s theta + chi+))
    C(setting, -) = sqrt(1 - r^2) exp(i (s theta + chi-))

with the second station's phases shifted by -s phi0. The modelled joint
probability of an outcome pair is (1/2) [Re(2 C1 C2*)]^2; for r = 1/sqrt 2,
chi+ = 0, chi- = pi/2 this is exactly the amplitude model's distribution.

The search is a multi-start compass descent with a fixed iteration budget.
Whether a good fit exists is measured, not assumed.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .amplitude import joint_distribution
from .config import resolve_workers
from .errors import DomainError
from .oracle import HardyResult, HardySettings
from .types import CANONICAL_PHI0, MINUS, PLUS, PairSpec, SpinKind, check_outcome

logger = logging.getLogger("qcorr.hardy_fit")

SETTING_LABELS = ("a", "a_prime", "b", "b_prime")
SIDE_A_LABELS = ("a", "a_prime")
NORMALIZATION_WEIGHT = 1.0
SUCCESS_THRESHOLD = 1e-6
DEFAULT_STARTS = 32
INITIAL_STEP = 0.5
MIN_STEP = 1e-12


@dataclass(frozen=True)
class TargetProbability:
    setting_pair: Tuple[str, str]
    outcome_pair: Tuple[int, int]
    value: float

    def __post_init__(self):
        if self.setting_pair[0] not in SIDE_A_LABELS or self.setting_pair[1] in SIDE_A_LABELS:
            raise DomainError(f"Setting pair must be (A label, B label), got {self.setting_pair}")
        for outcome in self.outcome_pair:
            check_outcome(outcome)
        if not 0.0 <= self.value <= 1.0:
            raise DomainError(f"Target probability must lie in [0, 1], got {self.value!r}")

    @property
    def label(self) -> str:
        sign = {PLUS: "+", MINUS: "-"}
        (x, y), (o1, o2) = self.setting_pair, self.outcome_pair
        return f"P({x}{sign[o1]},{y}{sign[o2]})"


@dataclass(frozen=True)
class HardyTargets:
    settings: HardySettings
    targets: Tuple[TargetProbability, ...]
    species: SpinKind = SpinKind.PHOTON

    def angle(self, label: str) -> float:
        return getattr(self.settings, label)

    @property
    def setting_pairs(self) -> List[Tuple[str, str]]:
        """Distinct setting pairs the targets refer to, in first-seen order."""
        seen: List[Tuple[str, str]] = []
        for t in self.targets:
            if t.setting_pair not in seen:
                seen.append(t.setting_pair)
        return seen

    def perturbed(self, index: int, value: float) -> "HardyTargets":
        targets = list(self.targets)
        targets[index] = replace(targets[index], value=value)
        return replace(self, targets=tuple(targets))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "species": self.species.value,
            "settings": dict(zip(SETTING_LABELS, self.settings.as_tuple())),
            "targets": {t.label: t.value for t in self.targets},
        }


# Hardy structure: one success probability and three zeros
_HARDY_LAYOUT = (
    (("a", "b"), (PLUS, PLUS)),
    (("a_prime", "b_prime"), (PLUS, PLUS)),
    (("a", "b_prime"), (PLUS, MINUS)),
    (("a_prime", "b"), (MINUS, PLUS)),
)


def targets_from_hardy(result: HardyResult) -> HardyTargets:
    """Targets taken verbatim from a feasible Hardy search result."""
    if not result.feasible:
        raise DomainError("Hardy search reported no feasible configuration")
    values = (result.p_star,) + tuple(result.p_zero)
    return HardyTargets(
        settings=result.settings,
        targets=tuple(
            TargetProbability(pair, outcomes, min(max(v, 0.0), 1.0))
            for (pair, outcomes), v in zip(_HARDY_LAYOUT, values)
        ),
    )


def maximal_targets(species: SpinKind, settings: HardySettings) -> HardyTargets:
    """Hardy-shaped targets generated by the amplitude model for the canonical pair."""
    spec = PairSpec.canonical(species)
    targets = []
    for (x, y), (o1, o2) in _HARDY_LAYOUT:
        dist = joint_distribution(getattr(settings, x), getattr(settings, y), spec)
        targets.append(TargetProbability((x, y), (o1, o2), dist.probability(o1, o2)))
    return HardyTargets(settings=settings, targets=tuple(targets), species=species)


@dataclass(frozen=True)
class LocalParams:
    r: float
    """Magnitude of the +1 outcome amplitude; the -1 outcome has sqrt(1 - r^2)"""

    chi_plus: float
    chi_minus: float

    def __post_init__(self):
        if not 0.0 <= self.r <= 1.0:
            raise DomainError(f"Magnitude split r must lie in [0, 1], got {self.r!r}")


@dataclass(frozen=True)
class FitParams:
    phi0: float
    local: Dict[str, LocalParams]
    angles: Dict[str, float]
    species: SpinKind = SpinKind.PHOTON

    @classmethod
    def symmetric(
        cls, angles: Dict[str, float], species: SpinKind, phi0: Optional[float] = None
    ) -> "FitParams":
        """The closed-form amplitudes: equal magnitudes, alternate outcome a quarter turn away."""
        local = {
            label: LocalParams(r=1.0 / math.sqrt(2.0), chi_plus=0.0, chi_minus=math.pi / 2)
            for label in SETTING_LABELS
        }
        return cls(
            phi0=CANONICAL_PHI0[species] if phi0 is None else phi0,
            local=local,
            angles=dict(angles),
            species=species,
        )

    def to_vector(self) -> np.ndarray:
        values = [self.phi0]
        for label in SETTING_LABELS:
            p = self.local[label]
            values.extend((p.r, p.chi_plus, p.chi_minus))
        return np.array(values)

    @classmethod
    def from_vector(cls, vector: Sequence[float], angles: Dict[str, float], species: SpinKind) -> "FitParams":
        local = {}
        for i, label in enumerate(SETTING_LABELS):
            r, chi_plus, chi_minus = vector[1 + 3 * i : 4 + 3 * i]
            local[label] = LocalParams(min(max(float(r), 0.0), 1.0), float(chi_plus), float(chi_minus))
        return cls(phi0=float(vector[0]), local=local, angles=dict(angles), species=species)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "species": self.species.value,
            "phi0": self.phi0,
            "local": {
                label: {"r": p.r, "chi_plus": p.chi_plus, "chi_minus": p.chi_minus}
                for label, p in self.local.items()
            },
        }


@dataclass
class FitResult:
    params: FitParams
    residual: float
    normalization_defect: float
    budget: int
    seed: int
    start_index: int
    targets: HardyTargets

    @property
    def threshold_met(self) -> bool:
        return self.residual <= SUCCESS_THRESHOLD

    def modelled(self) -> Dict[str, float]:
        return {t.label: model_joint_prob(self.params, t.setting_pair, t.outcome_pair) for t in self.targets.targets}

    def to_dict(self) -> Dict[str, Any]:
        data = self.targets.to_dict()
        data.update(
            {
                "params": self.params.to_dict(),
                "modelled": self.modelled(),
                "residual": self.residual,
                "normalization_defect": self.normalization_defect,
                "success_threshold": SUCCESS_THRESHOLD,
                "threshold_met": self.threshold_met,
                "budget": self.budget,
                "seed": self.seed,
                "best_start": self.start_index,
            }
        )
        return data


def _amplitude(params: FitParams, label: str, outcome: int) -> complex:
    s = float(params.species.s)
    local = params.local[label]
    phase = s * params.angles[label]
    if label not in SIDE_A_LABELS:
        phase -= s * params.phi0
    if outcome == PLUS:
        return local.r * complex(math.cos(phase + local.chi_plus), math.sin(phase + local.chi_plus))
    magnitude = math.sqrt(max(0.0, 1.0 - local.r * local.r))
    return magnitude * complex(math.cos(phase + local.chi_minus), math.sin(phase + local.chi_minus))


def model_joint_prob(
    params: FitParams, setting_pair: Tuple[str, str], outcome_pair: Tuple[int, int]
) -> float:
    """(1/2) [Re(2 C1(o1) conj(C2(o2)))]^2, reported raw (never clipped)."""
    c1 = _amplitude(params, setting_pair[0], outcome_pair[0])
    c2 = _amplitude(params, setting_pair[1], outcome_pair[1])
    correlation = 2.0 * (c1 * c2.conjugate()).real
    return 0.5 * correlation * correlation


def normalization_defect(params: FitParams, setting_pairs: Sequence[Tuple[str, str]]) -> float:
    """Largest |sum over outcome pairs - 1| among the given setting pairs."""
    defects = [abs(_pair_total(params, pair) - 1.0) for pair in setting_pairs]
    return max(defects) if defects else 0.0


def _pair_total(params: FitParams, pair: Tuple[str, str]) -> float:
    return sum(
        model_joint_prob(params, pair, (o1, o2)) for o1 in (PLUS, MINUS) for o2 in (PLUS, MINUS)
    )


def objective(params: FitParams, targets: HardyTargets) -> float:
    """Squared target errors plus NORMALIZATION_WEIGHT times squared normalisation defects."""
    total = 0.0
    for t in targets.targets:
        error = model_joint_prob(params, t.setting_pair, t.outcome_pair) - t.value
        total += error * error
    for pair in targets.setting_pairs:
        defect = _pair_total(params, pair) - 1.0
        total += NORMALIZATION_WEIGHT * defect * defect
    return total


def _descend(
    start: np.ndarray, targets: HardyTargets, angles: Dict[str, float], budget: int
) -> Tuple[float, np.ndarray]:
    # Compass search: +/- step per coordinate, greedy acceptance, halve on a failed sweep
    def evaluate(vector: np.ndarray) -> float:
        return objective(FitParams.from_vector(vector, angles, targets.species), targets)

    best = start.copy()
    best[1::3] = np.clip(best[1::3], 0.0, 1.0)
    best_value = evaluate(best)
    step = INITIAL_STEP
    for _ in range(budget):
        if step < MIN_STEP:
            break
        improved = False
        for i in range(best.size):
            for sign in (1.0, -1.0):
                trial = best.copy()
                trial[i] += sign * step
                if i % 3 == 1:
                    trial[i] = min(max(trial[i], 0.0), 1.0)
                value = evaluate(trial)
                if value < best_value:
                    best, best_value = trial, value
                    improved = True
        if not improved:
            step *= 0.5
    return best_value, best


def _starting_points(targets: HardyTargets, angles: Dict[str, float], n_starts: int, seed: int) -> List[np.ndarray]:
    rng = np.random.default_rng(seed)
    starts = [FitParams.symmetric(angles, targets.species).to_vector()]
    for _ in range(n_starts - 1):
        vector = rng.uniform(0.0, 2.0 * math.pi, size=1 + 3 * len(SETTING_LABELS))
        vector[1::3] = rng.uniform(0.0, 1.0, size=len(SETTING_LABELS))
        starts.append(vector)
    return starts


def fit_local_amplitudes(
    targets: HardyTargets,
    budget: int,
    seed: int,
    n_starts: int = DEFAULT_STARTS,
    workers: Optional[int] = None,
) -> FitResult:
    """
    Multi-start compass descent over FitParams.

    Start 0 is the closed-form amplitude set; the rest are drawn from the seed.
    The schedule of starts does not depend on the budget, so a larger budget can
    only lower the reported residual.

    Args:
        targets: The four joint probabilities to reproduce
        budget: Descent sweeps per start (must be positive)
        seed: Seed for the random starting points
        n_starts: Number of starts
        workers: Thread count (None = QCORR_THREADS / auto)
    """
    if budget < 1:
        raise DomainError(f"Fit budget must be positive, got {budget}")
    if n_starts < 1:
        raise DomainError(f"Need at least one start, got {n_starts}")
    angles = {label: targets.angle(label) for label in SETTING_LABELS}
    starts = _starting_points(targets, angles, n_starts, seed)

    with ThreadPoolExecutor(max_workers=resolve_workers(workers)) as pool:
        outcomes = list(pool.map(lambda v: _descend(v, targets, angles, budget), starts))

    # Deterministic reduction: lowest residual, ties by start index
    index = min(range(len(outcomes)), key=lambda i: (outcomes[i][0], i))
    residual, vector = outcomes[index]
    params = FitParams.from_vector(vector, angles, targets.species)
    result = FitResult(
        params=params,
        residual=residual,
        normalization_defect=normalization_defect(params, targets.setting_pairs),
        budget=budget,
        seed=seed,
        start_index=index,
        targets=targets,
    )
    logger.info(
        f"Hardy fit residual {residual:.3e} (threshold {'met' if result.threshold_met else 'not met'})",
        extra={
            "input_params": {"budget": budget, "seed": seed, "n_starts": n_starts},
            "output_data": {"residual": residual, "best_start": index},
        },
    )
    return result
