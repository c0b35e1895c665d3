import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from src.qcorr.analysis import visibility
from src.qcorr.continuum import (
    SlitGeometry,
    coincidence_fringe,
    coincidence_pattern,
    fringe_period,
    marginal_average,
    sample_pattern,
    single_marginal,
    slit_amplitude,
    twoslit_correlation,
    zero_crossings,
)
from src.qcorr.errors import DomainError

from tests.strategies import angles

geometries = st.builds(
    SlitGeometry,
    k=st.floats(min_value=0.2, max_value=5.0),
    alpha=st.floats(min_value=0.2, max_value=3.0),
    x0=st.floats(min_value=-2.0, max_value=2.0),
)


def test_equal_positions_give_full_coincidence():
    assert coincidence_pattern(0.7, 0.7, SlitGeometry()) == 1.0


@given(x1=angles, x2=angles, geom=geometries)
def test_pattern_is_correlation_squared(x1, x2, geom):
    assert abs(coincidence_pattern(x1, x2, geom) - twoslit_correlation(x1, x2, geom) ** 2) <= 1e-15


@given(x1=angles, x2=angles, geom=geometries)
def test_pattern_closed_form(x1, x2, geom):
    expected = (1 + math.cos(geom.alpha * geom.k * (x1 - x2))) / 2
    assert coincidence_pattern(x1, x2, geom) == pytest.approx(expected, abs=1e-12)


@given(x1=angles, x2=angles, geom=geometries)
def test_amplitudes_combine_to_correlation(x1, x2, geom):
    c1, c2 = slit_amplitude(x1, geom), slit_amplitude(x2, geom)
    U = 2 * (c1.re * c2.re + c1.im * c2.im)
    assert U == pytest.approx(twoslit_correlation(x1, x2, geom), abs=1e-12)


def test_visibility_is_one():
    geom = SlitGeometry(k=2.0, alpha=0.5)
    assert visibility(coincidence_fringe(geom)) == pytest.approx(1.0, abs=1e-12)
    _, pattern = sample_pattern(geom, -geom.period, geom.period, 257)
    assert visibility(pattern) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("k, alpha", [(1.0, 1.0), (2.0, 0.5), (3.7, 1.3)])
def test_period(k, alpha):
    geom = SlitGeometry(k=k, alpha=alpha)
    assert fringe_period(geom) == pytest.approx(2 * math.pi / (alpha * k), abs=1e-9)
    assert zero_crossings(geom).size == 4


@pytest.mark.parametrize("x1", [0.0, 0.4, -3.0])
def test_marginal_flatness(x1):
    geom = SlitGeometry(k=1.5, alpha=0.8, x0=0.2)
    assert marginal_average(x1, geom) == pytest.approx(0.5, abs=1e-9)
    assert single_marginal(x1, geom) == 0.5


def test_sample_pattern_grid():
    dx, pattern = sample_pattern(SlitGeometry(), -1.0, 1.0, 5)
    assert_allclose(dx, [-1.0, -0.5, 0.0, 0.5, 1.0])
    assert pattern[2] == 1.0
    assert np.all((pattern >= 0.0) & (pattern <= 1.0))


@pytest.mark.parametrize("k, alpha", [(0.0, 1.0), (1.0, -1.0), (math.nan, 1.0)])
def test_invalid_geometry(k, alpha):
    with pytest.raises(DomainError):
        SlitGeometry(k=k, alpha=alpha)


def test_too_few_samples():
    with pytest.raises(DomainError):
        sample_pattern(SlitGeometry(), 0.0, 1.0, 1)
