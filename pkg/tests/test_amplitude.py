import math

import numpy as np
import pytest
from hypothesis import given
from numpy.testing import assert_allclose

from src.qcorr.amplitude import (
    INV_SQRT2,
    amplitude_correlation,
    anticoincidence_probability,
    bell_correlation,
    bell_correlation_from_U,
    coincidence_probability,
    correlation_U,
    joint_distribution,
    local_amplitude,
    pair_amplitudes,
    pair_correlation,
    single_side_probability,
)
from src.qcorr.errors import DomainError
from src.qcorr.oracle import joint_probs_qm, state_for_species
from src.qcorr.types import AnalyzerSetting, PairSpec, SpinKind

from tests.strategies import angles, phases, species


class TestLocalAmplitude:
    def test_zero_phase(self):
        c = local_amplitude(0.0, SpinKind.PHOTON, 0.0)
        assert c.re == pytest.approx(INV_SQRT2, abs=1e-15)
        assert c.im == 0.0

    def test_quarter_turn(self):
        c = local_amplitude(math.pi / 2, SpinKind.PHOTON, 0.0)
        assert c.re == pytest.approx(0.0, abs=1e-15)
        assert c.im == pytest.approx(INV_SQRT2, abs=1e-15)

    @pytest.mark.parametrize("theta", [0.1, 1.3, 2.9])
    @pytest.mark.parametrize("kind", list(SpinKind))
    def test_magnitude_is_one_half(self, theta, kind):
        assert abs(local_amplitude(theta, kind, 0.0).probability - 0.5) <= 1e-15

    def test_half_spin_uses_half_angle(self):
        c = local_amplitude(math.pi, SpinKind.HALF, 0.0)
        assert c.phase == pytest.approx(math.pi / 2, abs=1e-15)

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_non_finite_rejected(self, bad):
        with pytest.raises(DomainError):
            local_amplitude(bad, SpinKind.PHOTON, 0.0)
        with pytest.raises(DomainError):
            local_amplitude(0.0, SpinKind.PHOTON, bad)

    @given(theta=angles, kind=species, phi=phases)
    def test_magnitude_law(self, theta, kind, phi):
        assert abs(single_side_probability(local_amplitude(theta, kind, phi)) - 0.5) <= 1e-15

    def test_accepts_analyzer_setting(self):
        assert local_amplitude(AnalyzerSetting(0.7), SpinKind.HALF, 0.2) == local_amplitude(0.7, SpinKind.HALF, 0.2)
        with pytest.raises(DomainError):
            AnalyzerSetting(math.nan)


class TestPairCorrelation:
    @given(theta1=angles, theta2=angles, phi=phases, kind=species)
    def test_internal_phase_cancels(self, theta1, theta2, phi, kind):
        spec = PairSpec.canonical(kind)
        assert abs(pair_correlation(theta1, theta2, phi, spec) - correlation_U(theta1, theta2, spec)) <= 1e-12

    def test_vectorised_matches_scalar(self):
        spec = PairSpec.canonical(SpinKind.PHOTON)
        theta1 = np.linspace(-3.0, 3.0, 41)
        phi = np.linspace(0.0, 6.0, 41)
        values = pair_correlation(theta1, 0.4, phi, spec)
        assert isinstance(values, np.ndarray)
        expected = [pair_correlation(float(t), 0.4, float(p), spec) for t, p in zip(theta1, phi)]
        assert_allclose(values, expected, rtol=0.0, atol=1e-15)


class TestCorrelationU:
    def test_photon_equal_angles_gives_zero(self, photon_spec):
        assert correlation_U(0.3, 0.3, photon_spec) == pytest.approx(0.0, abs=1e-15)
        assert coincidence_probability(correlation_U(0.3, 0.3, photon_spec)) == pytest.approx(0.0, abs=1e-30)

    @pytest.mark.parametrize("dtheta", [0.0, 0.2, 1.0, 2.5, -3.0])
    def test_photon_is_minus_sine(self, photon_spec, dtheta):
        assert correlation_U(dtheta, 0.0, photon_spec) == pytest.approx(-math.sin(dtheta), abs=1e-12)

    def test_half_opposite_analyzers(self, half_spec):
        assert correlation_U(math.pi, 0.0, half_spec) == -1.0

    @given(theta1=angles, theta2=angles, shift=angles, kind=species)
    def test_shift_invariance(self, theta1, theta2, shift, kind):
        spec = PairSpec.canonical(kind)
        U = correlation_U(theta1, theta2, spec)
        assert abs(correlation_U(theta1 + shift, theta2 + shift, spec) - U) <= 1e-12

    @given(theta1=angles, theta2=angles, phi=phases, kind=species)
    def test_local_amplitudes_combine_to_U(self, theta1, theta2, phi, kind):
        spec = PairSpec.canonical(kind)
        c1, c2 = pair_amplitudes(theta1, theta2, spec, phi)
        assert abs(amplitude_correlation(c1, c2) - correlation_U(theta1, theta2, spec)) <= 1e-12


class TestProbabilities:
    def test_zero_U(self):
        assert coincidence_probability(0.0) == 0.0
        assert anticoincidence_probability(0.0) == 1.0
        assert bell_correlation_from_U(0.0) == -1.0

    def test_photon_quarter_pi(self, photon_spec):
        U = correlation_U(math.pi / 4, 0.0, photon_spec)
        assert coincidence_probability(U) == pytest.approx(0.5, abs=1e-15)

    def test_half_right_angle(self, half_spec):
        U = correlation_U(math.pi / 2, 0.0, half_spec)
        assert coincidence_probability(U) == pytest.approx(0.5, abs=1e-15)

    @pytest.mark.parametrize("U", [1.0000001, -1.5, math.nan])
    def test_out_of_range_U(self, U):
        with pytest.raises(DomainError):
            coincidence_probability(U)
        with pytest.raises(DomainError):
            bell_correlation_from_U(U)

    def test_photon_bell_correlation_is_minus_cos_two_dtheta(self, photon_spec):
        grid = np.linspace(0.0, 2 * math.pi, 1001)
        model = [bell_correlation(d, 0.0, photon_spec) for d in grid]
        assert_allclose(model, -np.cos(2 * grid), rtol=0, atol=1e-12)

    def test_singlet_bell_correlation_is_minus_cos_dtheta(self, half_spec):
        grid = np.linspace(0.0, 2 * math.pi, 1001)
        model = [bell_correlation(d, 0.0, half_spec) for d in grid]
        assert_allclose(model, -np.cos(grid), rtol=0, atol=1e-12)

    def test_endpoints_are_exact(self, photon_spec, half_spec):
        assert bell_correlation(0.0, 0.0, photon_spec) == -1.0
        assert bell_correlation(0.0, 0.0, half_spec) == -1.0
        assert bell_correlation(math.pi, 0.0, half_spec) == 1.0


class TestJointDistribution:
    def test_photon_parallel(self, photon_spec):
        assert_allclose(joint_distribution(0.0, 0.0, photon_spec).as_tuple(), (0, 0.5, 0.5, 0), atol=1e-15)

    def test_half_opposite(self, half_spec):
        assert_allclose(joint_distribution(math.pi, 0.0, half_spec).as_tuple(), (0.5, 0, 0, 0.5), atol=1e-15)

    def test_photon_quarter_pi_is_uniform(self, photon_spec):
        dist = joint_distribution(math.pi / 4, 0.0, photon_spec)
        assert_allclose(dist.as_tuple(), (0.25,) * 4, atol=1e-15)
        oracle = joint_probs_qm(state_for_species(SpinKind.PHOTON), SpinKind.PHOTON, math.pi / 4, 0.0)
        assert_allclose(dist.as_tuple(), oracle.as_tuple(), atol=1e-12)

    @given(theta1=angles, theta2=angles, kind=species)
    def test_invariants(self, theta1, theta2, kind):
        spec = PairSpec.canonical(kind)
        dist = joint_distribution(theta1, theta2, spec).validate()
        assert min(dist.as_tuple()) >= 0.0
        assert abs(dist.marginal_a_plus - 0.5) <= 1e-12
        assert abs(dist.marginal_b_plus - 0.5) <= 1e-12
        U = correlation_U(theta1, theta2, spec)
        assert abs(dist.correlation - bell_correlation_from_U(U)) <= 1e-12

    @pytest.mark.parametrize("kind", list(SpinKind))
    def test_oracle_equivalence_on_grid(self, kind):
        spec = PairSpec.canonical(kind)
        state = state_for_species(kind)
        for d in np.linspace(0.0, 2 * math.pi, 1001):
            model = joint_distribution(float(d), 0.0, spec).as_tuple()
            oracle = joint_probs_qm(state, kind, float(d), 0.0).as_tuple()
            assert_allclose(model, oracle, rtol=0, atol=1e-12)

    @given(theta1=angles, theta2=angles, phi_a=phases, phi_b=phases, kind=species)
    def test_internal_phase_drops_out(self, theta1, theta2, phi_a, phi_b, kind):
        spec = PairSpec.canonical(kind)
        u_a = amplitude_correlation(*pair_amplitudes(theta1, theta2, spec, phi_a))
        u_b = amplitude_correlation(*pair_amplitudes(theta1, theta2, spec, phi_b))
        assert abs(u_a - u_b) <= 1e-12
