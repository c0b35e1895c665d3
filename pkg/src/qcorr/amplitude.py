"""
Local probability-amplitude model for maximally entangled pairs.

Each particle carries an internal phase phi; the second particle of a pair
carries phi + phi0. An analyzer at lab angle theta is referred to the particle's
own phase, and the transmission amplitude is C = exp(i s (theta - phi)) / sqrt(2).
Combining the two local amplitudes as U = Re(2 C1 C2*) gives a correlation that
depends only on theta1 - theta2 + phi0: the individual phi drops out.
"""

import math
from typing import Tuple, Union

import numpy as np

from .errors import DomainError
from .types import (
    AnalyzerSetting,
    ComplexAmplitude,
    JointDistribution,
    PairSpec,
    SpinKind,
    check_finite,
)

INV_SQRT2 = 1.0 / math.sqrt(2.0)

Angle = Union[AnalyzerSetting, float]


def _theta(setting: Angle) -> float:
    if isinstance(setting, AnalyzerSetting):
        return setting.theta
    return AnalyzerSetting(float(setting)).theta


def local_phase(theta, species: SpinKind, phi):
    """Phase s * (theta - phi) of a local amplitude; accepts floats or numpy arrays."""
    return float(species.s) * (theta - phi)


def local_amplitude(setting: Angle, species: SpinKind, phi: float) -> ComplexAmplitude:
    """
    Transmission amplitude of one particle at one analyzer.

    Args:
        setting: Lab-frame analyzer angle (an AnalyzerSetting or radians)
        species: Particle species (sets the spin magnitude s)
        phi: The particle's internal phase (radians)

    Returns:
        (1/sqrt 2) * exp(i * s * (theta - phi))
    """
    theta = _theta(setting)
    check_finite(phi=phi)
    phase = local_phase(theta, species, phi)
    return ComplexAmplitude(re=INV_SQRT2 * math.cos(phase), im=INV_SQRT2 * math.sin(phase))


def pair_amplitudes(
    theta1: float, theta2: float, spec: PairSpec, phi: float
) -> Tuple[ComplexAmplitude, ComplexAmplitude]:
    """Local amplitudes of both particles of a pair whose first member has phase phi."""
    c1 = local_amplitude(theta1, spec.species, phi)
    c2 = local_amplitude(theta2, spec.species, phi + spec.phi0)
    return c1, c2


def amplitude_correlation(c1: ComplexAmplitude, c2: ComplexAmplitude) -> float:
    """Correlation amplitude Re(2 * C1 * conj(C2)) built from two local amplitudes."""
    return 2.0 * (c1.re * c2.re + c1.im * c2.im)


def correlation_U(theta1: Angle, theta2: Angle, spec: PairSpec) -> float:
    """U = cos(s (theta1 - theta2) + s phi0), the (++)/(--) correlation amplitude."""
    theta1, theta2 = _theta(theta1), _theta(theta2)
    s = float(spec.s)
    return math.cos(s * (theta1 - theta2) + s * spec.phi0)


def pair_correlation(theta1, theta2, phi, spec: PairSpec):
    """
    U from the phases of the two particles of one pair.

    The first particle carries phi and the second phi + phi0. phi cancels in the
    difference up to rounding, so the result equals correlation_U. Accepts
    floats or numpy arrays.
    """
    phase1 = local_phase(theta1, spec.species, phi)
    phase2 = local_phase(theta2, spec.species, phi + spec.phi0)
    if isinstance(phase1, np.ndarray) or isinstance(phase2, np.ndarray):
        return np.cos(phase1 - phase2)
    return math.cos(phase1 - phase2)


def _check_unit_range(U: float) -> None:
    if not -1.0 <= U <= 1.0:
        raise DomainError(f"Correlation amplitude must lie in [-1, 1], got {U!r}")


def coincidence_probability(U: float) -> float:
    """Probability of a coincidence (++ or --)."""
    _check_unit_range(U)
    return U * U


def anticoincidence_probability(U: float) -> float:
    _check_unit_range(U)
    return 1.0 - U * U


def bell_correlation_from_U(U: float) -> float:
    """Coincidences minus anticoincidences: P(a, b) = 2 U^2 - 1."""
    _check_unit_range(U)
    return 2.0 * U * U - 1.0


def single_side_probability(amplitude: ComplexAmplitude) -> float:
    """Single-station transmission probability |C|^2."""
    return amplitude.probability


def joint_distribution(theta1: float, theta2: float, spec: PairSpec) -> JointDistribution:
    """
    Outcome-pair probabilities for one setting pair.

    The coincidence probability U^2 is split equally between ++ and --, and the
    anticoincidence probability between +- and -+, so both single-side
    marginals are exactly 1/2. No per-particle phase enters.
    """
    coinc = coincidence_probability(correlation_U(theta1, theta2, spec))
    anti = 1.0 - coinc
    return JointDistribution(
        p_pp=coinc / 2.0,
        p_pm=anti / 2.0,
        p_mp=anti / 2.0,
        p_mm=coinc / 2.0,
    )


def bell_correlation(theta1: float, theta2: float, spec: PairSpec) -> float:
    """Model Bell correlation at a setting pair."""
    return bell_correlation_from_U(correlation_U(theta1, theta2, spec))
