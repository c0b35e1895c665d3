"""
Types shared by the correlation models, the oracle and the event engine.

Angles are radians (double precision, never normalised). Spin magnitudes are
exact rationals and only become floats when multiplied into an angle.
"""

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Tuple

from .errors import DomainError


# Default comparison tolerances
ANALYTIC_TOLERANCE = 1e-12
MAGNITUDE_TOLERANCE = 1e-15

PLUS = 1
MINUS = -1
OUTCOMES = (PLUS, MINUS)
# Ordering used everywhere a distribution is flattened: (++, +-, -+, --)
OUTCOME_PAIRS: Tuple[Tuple[int, int], ...] = (
    (PLUS, PLUS),
    (PLUS, MINUS),
    (MINUS, PLUS),
    (MINUS, MINUS),
)


def check_finite(**values: float) -> None:
    """Raise DomainError naming the first non-finite keyword argument."""
    for name, value in values.items():
        if not math.isfinite(value):
            raise DomainError(f"{name} must be finite, got {value!r}")


def check_outcome(outcome: int) -> int:
    if outcome not in OUTCOMES:
        raise DomainError(f"Outcome must be +1 or -1, got {outcome!r}")
    return outcome


class SpinKind(Enum):
    """
    Particle species of an entangled pair.

    PHOTON: polarisation-entangled photons (s = 1)
    HALF: spin-1/2 particles measured with Stern-Gerlach analysers (s = 1/2)
    """

    PHOTON = "photon"
    HALF = "half"

    @property
    def s(self) -> Fraction:
        """Spin magnitude in units of hbar."""
        return SPIN_MAGNITUDES[self]

    @classmethod
    def parse(cls, label: str) -> "SpinKind":
        try:
            return cls(label.strip().lower())
        except ValueError:
            raise DomainError(
                f"Unknown species {label!r}. Valid species: {[k.value for k in cls]}"
            ) from None


SPIN_MAGNITUDES = {
    SpinKind.PHOTON: Fraction(1),
    SpinKind.HALF: Fraction(1, 2),
}

# Source phase offsets of the two textbook pairs
CANONICAL_PHI0 = {
    SpinKind.PHOTON: math.pi / 2,  # orthogonal polarisations at source
    SpinKind.HALF: math.pi,  # singlet
}


@dataclass(frozen=True)
class AnalyzerSetting:
    """Lab-frame analyzer orientation."""

    theta: float

    def __post_init__(self):
        check_finite(theta=self.theta)


@dataclass(frozen=True)
class PairSpec:
    """One entangled-pair family: species plus the source phase offset phi0."""

    species: SpinKind
    phi0: float

    def __post_init__(self):
        check_finite(phi0=self.phi0)

    @classmethod
    def canonical(cls, species: SpinKind) -> "PairSpec":
        """Photon pair with phi0 = pi/2, or singlet with phi0 = pi."""
        return cls(species=species, phi0=CANONICAL_PHI0[species])

    @property
    def s(self) -> Fraction:
        return self.species.s


@dataclass(frozen=True)
class ComplexAmplitude:
    """Local transmission amplitude; its squared magnitude is a probability."""

    re: float
    im: float

    @property
    def probability(self) -> float:
        return self.re * self.re + self.im * self.im

    @property
    def phase(self) -> float:
        return math.atan2(self.im, self.re)


@dataclass(frozen=True)
class JointDistribution:
    """Probabilities of the four outcome pairs for one setting pair."""

    p_pp: float
    p_pm: float
    p_mp: float
    p_mm: float

    @classmethod
    def from_sequence(cls, values) -> "JointDistribution":
        p_pp, p_pm, p_mp, p_mm = (float(v) for v in values)
        return cls(p_pp=p_pp, p_pm=p_pm, p_mp=p_mp, p_mm=p_mm)

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.p_pp, self.p_pm, self.p_mp, self.p_mm)

    def probability(self, outcome_a: int, outcome_b: int) -> float:
        return self.as_tuple()[OUTCOME_PAIRS.index((outcome_a, outcome_b))]

    @property
    def total(self) -> float:
        return self.p_pp + self.p_pm + self.p_mp + self.p_mm

    @property
    def coincidence(self) -> float:
        """Probability of equal outcomes (++ or --)."""
        return self.p_pp + self.p_mm

    @property
    def anticoincidence(self) -> float:
        return self.p_pm + self.p_mp

    @property
    def correlation(self) -> float:
        """Bell correlation: sum of o1 * o2 * p over the outcome pairs."""
        return self.p_pp + self.p_mm - self.p_pm - self.p_mp

    @property
    def marginal_a_plus(self) -> float:
        return self.p_pp + self.p_pm

    @property
    def marginal_b_plus(self) -> float:
        return self.p_pp + self.p_mp

    def validate(self, tolerance: float = ANALYTIC_TOLERANCE) -> "JointDistribution":
        """Check nonnegativity and normalisation; returns self for chaining."""
        if min(self.as_tuple()) < -tolerance:
            raise DomainError(f"Negative probability in {self}")
        if abs(self.total - 1.0) > tolerance:
            raise DomainError(f"Distribution sums to {self.total!r}, expected 1")
        return self
