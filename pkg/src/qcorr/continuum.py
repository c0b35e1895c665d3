"""
Position-momentum entangled pairs behind double slits.

The detector coordinate plays the role of the analyzer angle through the
mapping onto the spin-1/2 problem, hence the halved phase alpha k (x - x0) / 2.
"""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .amplitude import INV_SQRT2
from .analysis import CosineFringe
from .errors import DomainError
from .types import ComplexAmplitude, check_finite


@dataclass(frozen=True)
class SlitGeometry:
    k: float = 1.0
    """Wave number (radians per unit length)"""

    alpha: float = 1.0
    """Dimensionless scaling of the angle subtended by the slits"""

    x0: float = 0.0
    """Reference detector coordinate"""

    def __post_init__(self):
        check_finite(k=self.k, alpha=self.alpha, x0=self.x0)
        if self.k <= 0 or self.alpha <= 0:
            raise DomainError(f"k and alpha must be positive, got k={self.k}, alpha={self.alpha}")

    @property
    def period(self) -> float:
        """Nominal fringe period in x1 - x2."""
        return 2.0 * math.pi / (self.alpha * self.k)


def slit_amplitude(x: float, geom: SlitGeometry) -> ComplexAmplitude:
    """(1/sqrt 2) exp(i alpha k (x - x0) / 2) at detector coordinate x."""
    check_finite(x=x)
    phase = geom.alpha * geom.k * (x - geom.x0) / 2.0
    return ComplexAmplitude(re=INV_SQRT2 * math.cos(phase), im=INV_SQRT2 * math.sin(phase))


def twoslit_correlation(x1: float, x2: float, geom: SlitGeometry) -> float:
    """U(x1, x2) = cos(alpha k (x1 - x2) / 2)."""
    check_finite(x1=x1, x2=x2)
    return math.cos(geom.alpha * geom.k * (x1 - x2) / 2.0)


def coincidence_pattern(x1: float, x2: float, geom: SlitGeometry) -> float:
    """Two-detector coincidence probability U^2 = (1 + cos alpha k (x1 - x2)) / 2."""
    U = twoslit_correlation(x1, x2, geom)
    return U * U


def coincidence_fringe(geom: SlitGeometry) -> CosineFringe:
    """The coincidence pattern in x1 - x2 as a closed-form fringe."""
    return CosineFringe(offset=0.5, amplitude=0.5, period=geom.period)


def single_marginal(x: float, geom: SlitGeometry) -> float:
    """Single-detector count probability: flat, no interference."""
    check_finite(x=x)
    return 0.5


def marginal_average(x1: float, geom: SlitGeometry) -> float:
    """Coincidence pattern averaged over one period of the remote coordinate."""
    check_finite(x1=x1)
    period = geom.period
    total, _ = quad(lambda x2: coincidence_pattern(x1, x2, geom), x1, x1 + period, epsabs=1e-13, epsrel=1e-13)
    return total / period


def zero_crossings(geom: SlitGeometry, span_periods: float = 2.0, intervals: int = 210) -> np.ndarray:
    """
    Roots of pattern - 1/2 in dx = x1 - x2 over [0, span_periods * period].

    Sign changes on a coarse grid are bracketed and refined with brentq.
    """
    def f(dx: float) -> float:
        return coincidence_pattern(geom.x0 + dx, geom.x0, geom) - 0.5

    grid = np.linspace(0.0, span_periods * geom.period, intervals + 1)
    values = np.array([f(d) for d in grid])
    roots = []
    for left, right, f_left, f_right in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if f_left == 0.0:
            roots.append(float(left))
        elif f_left * f_right < 0.0:
            roots.append(brentq(f, left, right, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    return np.array(roots)


def fringe_period(geom: SlitGeometry) -> float:
    """Measured period: distance between every other zero crossing of pattern - 1/2."""
    roots = zero_crossings(geom)
    if roots.size < 3:
        raise DomainError(f"Found only {roots.size} zero crossings")
    return float(roots[2] - roots[0])


def sample_pattern(
    geom: SlitGeometry, dx_start: float, dx_stop: float, points: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Pattern sampled on a uniform dx grid (x2 held at x0)."""
    if points < 2:
        raise DomainError("Need at least 2 sample points")
    dx = np.linspace(dx_start, dx_stop, points)
    pattern = np.array([coincidence_pattern(geom.x0 + d, geom.x0, geom) for d in dx])
    return dx, pattern
