"""
Standard quantum-mechanical reference predictions.

State vectors, rank-1 analyzer projectors and the Born rule, computed with
dense numpy arithmetic and without touching the amplitude model. Also hosts
the Hardy-configuration search over a family of non-maximally entangled states.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .config import resolve_workers
from .errors import DomainError
from .types import (
    ANALYTIC_TOLERANCE,
    MINUS,
    OUTCOME_PAIRS,
    PLUS,
    JointDistribution,
    SpinKind,
    check_finite,
    check_outcome,
)

logger = logging.getLogger("qcorr.oracle")

INV_SQRT2 = 1.0 / math.sqrt(2.0)

# A Hardy zero counts as satisfied below this
HARDY_ZERO_TOLERANCE = 1e-10
# Success probabilities at or below this are treated as "no Hardy structure"
HARDY_P_STAR_FLOOR = 1e-12
# A Hardy state with sin(2 zeta) below this is indistinguishable from a product state
HARDY_MIN_CONCURRENCE = 0.1
HARDY_MIN_DENSITY = 8


class BellKind(Enum):
    PHOTON_ANTICORRELATED = "photon_anticorrelated"
    SINGLET = "singlet"


@dataclass(eq=False)
class PureTwoParticleState:
    """Four complex amplitudes ordered (++, +-, -+, --) in the computational basis."""

    amps: np.ndarray

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=np.complex128).reshape(-1)
        if self.amps.shape != (4,):
            raise DomainError(f"Two-particle state needs 4 amplitudes, got {self.amps.shape}")

    @property
    def norm_squared(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def is_normalized(self, tolerance: float = ANALYTIC_TOLERANCE) -> bool:
        return abs(self.norm_squared - 1.0) <= tolerance

    def to_list(self) -> List[List[float]]:
        return [[float(z.real), float(z.imag)] for z in self.amps]


@dataclass(eq=False)
class Projector:
    """2x2 Hermitian rank-1 projector."""

    matrix: np.ndarray

    def is_valid(self, tolerance: float = ANALYTIC_TOLERANCE) -> bool:
        m = self.matrix
        hermitian = np.allclose(m, m.conj().T, rtol=0.0, atol=tolerance)
        idempotent = np.allclose(m @ m, m, rtol=0.0, atol=tolerance)
        unit_trace = abs(np.trace(m) - 1.0) <= tolerance
        return bool(hermitian and idempotent and unit_trace)


@dataclass(frozen=True)
class HardySettings:
    a: float
    a_prime: float
    b: float
    b_prime: float

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.a, self.a_prime, self.b, self.b_prime)


@dataclass(eq=False)
class HardyResult:
    """
    Outcome of the Hardy search.

    p_zero holds P(a'+, b'+), P(a+, b'-) and P(a'-, b+); p_star is P(a+, b+).
    When no feasible point exists, feasible is False and nothing else is meaningful.
    """

    feasible: bool
    state: Optional[PureTwoParticleState] = None
    settings: Optional[HardySettings] = None
    p_zero: Tuple[float, float, float] = (math.nan, math.nan, math.nan)
    p_star: float = 0.0
    zeta: float = math.nan
    grid_density: int = 0
    refine_tolerance: float = math.nan
    params: Dict[str, float] = field(default_factory=dict)

    @property
    def concurrence(self) -> float:
        """sin(2 zeta): 0 for a product state, 1 when maximally entangled."""
        return math.sin(2.0 * self.zeta)

    def to_dict(self) -> Dict[str, Any]:
        if not self.feasible:
            return {
                "feasible": False,
                "grid_density": self.grid_density,
                "refine_tolerance": self.refine_tolerance,
            }
        return {
            "feasible": True,
            "zeta": self.zeta,
            "concurrence": self.concurrence,
            "state": self.state.to_list(),
            "settings": dict(zip(("a", "a_prime", "b", "b_prime"), self.settings.as_tuple())),
            "p_zero": {
                "a_prime_plus_b_prime_plus": self.p_zero[0],
                "a_plus_b_prime_minus": self.p_zero[1],
                "a_prime_minus_b_plus": self.p_zero[2],
            },
            "p_star": self.p_star,
            "grid_density": self.grid_density,
            "refine_tolerance": self.refine_tolerance,
        }


# ---------------------------------------------------------------------------
# States and projectors
# ---------------------------------------------------------------------------


def bell_state(kind: BellKind) -> PureTwoParticleState:
    """
    Maximally entangled reference states.

    Both are (|+-> - |-+>)/sqrt 2 in their own basis: H/V polarisation for the
    photon pair, up/down along the reference axis for the singlet.
    """
    if not isinstance(kind, BellKind):
        kind = BellKind(kind)
    return PureTwoParticleState(np.array([0.0, INV_SQRT2, -INV_SQRT2, 0.0]))


def schmidt_state(zeta: float) -> PureTwoParticleState:
    """cos(zeta)|++> + sin(zeta)|-->; maximally entangled at zeta = pi/4."""
    check_finite(zeta=zeta)
    return PureTwoParticleState(np.array([math.cos(zeta), 0.0, 0.0, math.sin(zeta)]))


def state_for_species(species: SpinKind) -> PureTwoParticleState:
    """The textbook pair the amplitude model is compared against."""
    if species is SpinKind.PHOTON:
        return bell_state(BellKind.PHOTON_ANTICORRELATED)
    return bell_state(BellKind.SINGLET)


def _analyzer_vector(species: SpinKind, theta: float, outcome: int) -> np.ndarray:
    # Polarisers rotate with the full angle, Stern-Gerlach eigenstates with half of it
    angle = theta if species is SpinKind.PHOTON else theta / 2.0
    c, s = math.cos(angle), math.sin(angle)
    if outcome == PLUS:
        return np.array([c, s], dtype=np.complex128)
    return np.array([-s, c], dtype=np.complex128)


def analyzer_projector(species: SpinKind, theta: float, outcome: int) -> Projector:
    """Projector onto the analyzer eigenstate for the given +1/-1 outcome."""
    check_finite(theta=theta)
    check_outcome(outcome)
    v = _analyzer_vector(species, theta, outcome)
    return Projector(np.outer(v, v.conj()))


def _born(state: PureTwoParticleState, p1: Projector, p2: Projector) -> float:
    op = np.kron(p1.matrix, p2.matrix)
    return float(np.vdot(state.amps, op @ state.amps).real)


def _require_normalized(state: PureTwoParticleState) -> None:
    if not state.is_normalized():
        raise DomainError(f"State is not normalised: |psi|^2 = {state.norm_squared!r}")


def joint_probs_qm(
    state: PureTwoParticleState, species: SpinKind, theta1: float, theta2: float
) -> JointDistribution:
    """Born-rule probabilities <psi| P1(o1) x P2(o2) |psi> for the four outcome pairs."""
    _require_normalized(state)
    projectors_a = {o: analyzer_projector(species, theta1, o) for o in (PLUS, MINUS)}
    projectors_b = {o: analyzer_projector(species, theta2, o) for o in (PLUS, MINUS)}
    return JointDistribution.from_sequence(
        _born(state, projectors_a[o1], projectors_b[o2]) for o1, o2 in OUTCOME_PAIRS
    )


def correlation_qm(
    state: PureTwoParticleState, species: SpinKind, theta1: float, theta2: float
) -> float:
    """Expectation of the outcome product, sum of o1 * o2 * P(o1, o2)."""
    return joint_probs_qm(state, species, theta1, theta2).correlation


def marginal_probs_qm(
    state: PureTwoParticleState,
    species: SpinKind,
    station: str,
    theta_local: float,
    theta_remote: float,
) -> float:
    """Probability of +1 at one station, with the remote analyzer at theta_remote."""
    if station == "A":
        return joint_probs_qm(state, species, theta_local, theta_remote).marginal_a_plus
    if station == "B":
        return joint_probs_qm(state, species, theta_remote, theta_local).marginal_b_plus
    raise DomainError(f"Unknown station {station!r}")


# ---------------------------------------------------------------------------
# Hardy configuration
# ---------------------------------------------------------------------------


def hardy_probabilities(
    state: PureTwoParticleState, settings: HardySettings
) -> Tuple[float, Tuple[float, float, float]]:
    """
    The four Hardy-relevant joint probabilities (polariser-type analyzers).

    With all three zeros, a+ forces b'+ and b+ forces a'+, yet a'+ and b'+
    never occur together; any p_star > 0 has no local deterministic account.

    Returns:
        (p_star, (P(a'+, b'+), P(a+, b'-), P(a'-, b+)))
    """
    species = SpinKind.PHOTON
    p_star = joint_probs_qm(state, species, settings.a, settings.b).p_pp
    z1 = joint_probs_qm(state, species, settings.a_prime, settings.b_prime).p_pp
    z2 = joint_probs_qm(state, species, settings.a, settings.b_prime).p_pm
    z3 = joint_probs_qm(state, species, settings.a_prime, settings.b).p_mp
    return p_star, (z1, z2, z3)


def hardy_settings_for(zeta: float, a: float) -> HardySettings:
    """
    Settings that make the three Hardy zeros vanish for the Schmidt state at zeta.

    Starting from the free angle a, each next analyzer is set orthogonal to the
    vector the state maps the previous outcome onto: b' from P(a+, b'-) = 0,
    a' from P(a'+, b'+) = 0, then b from P(a'-, b+) = 0.
    """
    c, s = math.cos(zeta), math.sin(zeta)
    b_prime = math.atan2(s * math.sin(a), c * math.cos(a))
    a_prime = math.atan2(c * math.cos(b_prime), -s * math.sin(b_prime))
    b = math.atan2(c * math.sin(a_prime), s * math.cos(a_prime))
    return HardySettings(a=a, a_prime=a_prime, b=b, b_prime=b_prime)


@dataclass(frozen=True)
class _HardyCandidate:
    zeta: float
    a: float
    p_star: float
    p_zero: Tuple[float, float, float]

    @property
    def feasible(self) -> bool:
        return (
            max(self.p_zero) <= HARDY_ZERO_TOLERANCE and self.p_star > HARDY_P_STAR_FLOOR
        )

    def score(self) -> float:
        return self.p_star if self.feasible else -math.inf


def _evaluate(zeta: float, a: float) -> _HardyCandidate:
    settings = hardy_settings_for(zeta, a)
    p_star, p_zero = hardy_probabilities(schmidt_state(zeta), settings)
    return _HardyCandidate(zeta=zeta, a=a, p_star=p_star, p_zero=p_zero)


def hardy_point(zeta: float, a: float) -> HardyResult:
    """Hardy probabilities at one (zeta, a) point of the search family."""
    candidate = _evaluate(zeta, a)
    return _to_result(candidate, grid_density=0, refine_tolerance=math.nan, force=True)


def _to_result(
    candidate: _HardyCandidate, grid_density: int, refine_tolerance: float, force: bool = False
) -> HardyResult:
    if not (candidate.feasible or force):
        return HardyResult(
            feasible=False, grid_density=grid_density, refine_tolerance=refine_tolerance
        )
    return HardyResult(
        feasible=candidate.feasible,
        state=schmidt_state(candidate.zeta),
        settings=hardy_settings_for(candidate.zeta, candidate.a),
        p_zero=candidate.p_zero,
        p_star=candidate.p_star,
        zeta=candidate.zeta,
        grid_density=grid_density,
        refine_tolerance=refine_tolerance,
        params={"zeta": candidate.zeta, "a": candidate.a},
    )


def _grid_row(zeta: float, a_grid: np.ndarray) -> List[_HardyCandidate]:
    return [_evaluate(zeta, float(ap)) for ap in a_grid]


def _refine(
    start: _HardyCandidate, step: float, tolerance: float, zeta_bounds: Tuple[float, float]
) -> _HardyCandidate:
    # Compass search on (zeta, a): try +/- step on each axis, halve on failure
    best = start
    lo, hi = zeta_bounds
    while step >= tolerance:
        improved = False
        for d_zeta, d_a in ((step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)):
            zeta = min(max(best.zeta + d_zeta, lo), hi)
            candidate = _evaluate(zeta, best.a + d_a)
            if candidate.score() > best.score():
                best = candidate
                improved = True
        if not improved:
            step *= 0.5
    return best


def hardy_search(
    grid_density: int = 64,
    refine_tolerance: float = 1e-10,
    workers: Optional[int] = None,
) -> HardyResult:
    """
    Search the Schmidt family for the largest Hardy success probability.

    The state cos(zeta)|++> + sin(zeta)|--> and the free angle a parameterise
    the family; the other three settings are fixed by the zero constraints.
    A grid_density x grid_density grid over zeta in (0, pi/4), a in (0, pi) is
    evaluated, then the best feasible cell is refined by compass search until the
    step falls below refine_tolerance.

    Args:
        grid_density: Grid points per axis (at least 8)
        refine_tolerance: Final step size of the refinement (radians)
        workers: Thread count for the grid (None = QCORR_THREADS / auto)

    Returns:
        HardyResult; feasible=False when no grid cell satisfies the constraints
    """
    if grid_density < HARDY_MIN_DENSITY:
        raise DomainError(f"grid_density must be >= {HARDY_MIN_DENSITY}, got {grid_density}")
    if not refine_tolerance > 0.0:
        raise DomainError(f"refine_tolerance must be positive, got {refine_tolerance!r}")

    zeta_max = math.pi / 4.0
    zeta_grid = (np.arange(grid_density) + 0.5) / grid_density * zeta_max
    a_grid = (np.arange(grid_density) + 0.5) / grid_density * math.pi

    with ThreadPoolExecutor(max_workers=resolve_workers(workers)) as pool:
        rows = list(pool.map(lambda z: _grid_row(float(z), a_grid), zeta_grid))
    cells = [c for row in rows for c in row if c.feasible]

    if not cells:
        logger.warning(
            "Hardy search found no feasible grid cell",
            extra={"input_params": {"grid_density": grid_density}},
        )
        return HardyResult(
            feasible=False, grid_density=grid_density, refine_tolerance=refine_tolerance
        )

    # Deterministic reduction: highest p_star, ties by lexicographic (zeta, a)
    best = min(cells, key=lambda c: (-c.p_star, c.zeta, c.a))
    step = min(zeta_max, math.pi) / grid_density
    refined = _refine(best, step, refine_tolerance, (1e-9, zeta_max - 1e-9))

    logger.info(
        f"Hardy search: p_star={refined.p_star:.12f} at zeta={refined.zeta:.12f}",
        extra={
            "input_params": {"grid_density": grid_density, "refine_tolerance": refine_tolerance},
            "output_data": {"p_star": refined.p_star, "p_zero": list(refined.p_zero)},
        },
    )
    return _to_result(refined, grid_density, refine_tolerance)
