import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from numpy.testing import assert_allclose

from src.qcorr.errors import DomainError
from src.qcorr.oracle import (
    HARDY_MIN_CONCURRENCE,
    HARDY_ZERO_TOLERANCE,
    BellKind,
    PureTwoParticleState,
    analyzer_projector,
    bell_state,
    correlation_qm,
    hardy_point,
    hardy_probabilities,
    hardy_search,
    hardy_settings_for,
    joint_probs_qm,
    marginal_probs_qm,
    schmidt_state,
    state_for_species,
)
from src.qcorr.types import MINUS, PLUS, SpinKind

from tests.strategies import angles, species

# Largest Hardy success probability for two qubits
HARDY_OPTIMUM = (5 * math.sqrt(5) - 11) / 2


class TestStates:
    @pytest.mark.parametrize("kind", list(BellKind))
    def test_bell_states_normalized(self, kind):
        state = bell_state(kind)
        assert state.is_normalized()
        assert_allclose(state.amps, [0, 1 / math.sqrt(2), -1 / math.sqrt(2), 0], atol=1e-15)

    @given(zeta=angles)
    def test_schmidt_state_normalized(self, zeta):
        assert schmidt_state(zeta).is_normalized()

    def test_wrong_size_rejected(self):
        with pytest.raises(DomainError):
            PureTwoParticleState(np.zeros(3))

    def test_unnormalized_state_rejected(self):
        state = PureTwoParticleState(np.array([1.0, 1.0, 0.0, 0.0]))
        with pytest.raises(DomainError):
            joint_probs_qm(state, SpinKind.PHOTON, 0.0, 0.0)


class TestProjectors:
    @given(theta=angles, kind=species)
    def test_projectors_valid_and_complete(self, theta, kind):
        plus = analyzer_projector(kind, theta, PLUS)
        minus = analyzer_projector(kind, theta, MINUS)
        assert plus.is_valid() and minus.is_valid()
        assert_allclose(plus.matrix + minus.matrix, np.eye(2), atol=1e-12)

    @pytest.mark.parametrize(
        "kind, theta, expected",
        [
            (SpinKind.PHOTON, 0.0, [[1.0, 0.0], [0.0, 0.0]]),
            (SpinKind.HALF, 0.0, [[1.0, 0.0], [0.0, 0.0]]),
            (SpinKind.PHOTON, math.pi / 4, [[0.5, 0.5], [0.5, 0.5]]),
            (SpinKind.HALF, math.pi / 2, [[0.5, 0.5], [0.5, 0.5]]),
        ],
    )
    def test_plus_projector_examples(self, kind, theta, expected):
        assert_allclose(analyzer_projector(kind, theta, PLUS).matrix, expected, atol=1e-15)

    def test_minus_projector_is_orthogonal_complement(self):
        assert_allclose(analyzer_projector(SpinKind.PHOTON, 0.0, MINUS).matrix, [[0.0, 0.0], [0.0, 1.0]], atol=1e-15)

    def test_bad_outcome(self):
        with pytest.raises(DomainError):
            analyzer_projector(SpinKind.PHOTON, 0.0, 0)


class TestBornRule:
    @given(theta1=angles, theta2=angles, kind=species)
    def test_distribution_is_normalized(self, theta1, theta2, kind):
        dist = joint_probs_qm(state_for_species(kind), kind, theta1, theta2)
        assert min(dist.as_tuple()) >= -1e-15
        assert abs(dist.total - 1.0) <= 1e-12

    @pytest.mark.parametrize("dtheta", [0.0, 0.3, math.pi / 4, 2.0])
    def test_photon_correlation(self, dtheta):
        state = state_for_species(SpinKind.PHOTON)
        assert correlation_qm(state, SpinKind.PHOTON, dtheta, 0.0) == pytest.approx(-math.cos(2 * dtheta), abs=1e-12)

    @pytest.mark.parametrize("dtheta", [0.0, 0.3, math.pi / 2, math.pi])
    def test_singlet_correlation(self, dtheta):
        state = state_for_species(SpinKind.HALF)
        assert correlation_qm(state, SpinKind.HALF, dtheta, 0.0) == pytest.approx(-math.cos(dtheta), abs=1e-12)

    @given(local=angles, remote_1=angles, remote_2=angles, kind=species)
    def test_no_signalling(self, local, remote_1, remote_2, kind):
        state = state_for_species(kind)
        for station in ("A", "B"):
            p1 = marginal_probs_qm(state, kind, station, local, remote_1)
            p2 = marginal_probs_qm(state, kind, station, local, remote_2)
            assert abs(p1 - 0.5) <= 1e-12
            assert abs(p1 - p2) <= 1e-12

    def test_unknown_station(self):
        with pytest.raises(DomainError):
            marginal_probs_qm(state_for_species(SpinKind.PHOTON), SpinKind.PHOTON, "C", 0.0, 0.0)


class TestHardy:
    @pytest.mark.parametrize("zeta", [0.2, 0.5, 0.7])
    @pytest.mark.parametrize("a", [0.4, 1.1, 2.5])
    def test_settings_enforce_zeros(self, zeta, a):
        _, zeros = hardy_probabilities(schmidt_state(zeta), hardy_settings_for(zeta, a))
        assert max(abs(z) for z in zeros) <= HARDY_ZERO_TOLERANCE

    def test_no_local_assignment_satisfies_the_layout(self):
        # Outcomes fixed in advance for (a, a', b, b'): success plus all three zeros is contradictory
        consistent = [
            (oa, oap, ob, obp)
            for oa, oap, ob, obp in itertools.product((PLUS, MINUS), repeat=4)
            if (oa, ob) == (PLUS, PLUS)
            and not (oap == PLUS and obp == PLUS)
            and not (oa == PLUS and obp == MINUS)
            and not (oap == MINUS and ob == PLUS)
        ]
        assert consistent == []

    def test_product_state_has_no_hardy_structure(self):
        result = hardy_point(1e-9, 1.9)
        assert result.p_star <= 1e-12
        assert not result.feasible

    def test_maximally_entangled_state_has_no_hardy_structure(self):
        result = hardy_point(math.pi / 4, 0.9)
        assert result.p_star == pytest.approx(0.0, abs=1e-15)
        assert not result.feasible

    def test_search_finds_optimum(self):
        result = hardy_search(grid_density=16, refine_tolerance=1e-10)
        assert result.feasible
        assert result.p_star > 0.0
        assert max(abs(z) for z in result.p_zero) <= HARDY_ZERO_TOLERANCE
        assert result.p_star == pytest.approx(HARDY_OPTIMUM, abs=1e-6)
        assert result.state.is_normalized()

    @pytest.mark.parametrize("density", [64, 96])
    def test_default_densities_find_entangled_optimum(self, density):
        result = hardy_search(grid_density=density)
        assert result.p_star == pytest.approx(HARDY_OPTIMUM, abs=1e-6)
        assert result.concurrence >= HARDY_MIN_CONCURRENCE
        assert result.concurrence == pytest.approx(3 - math.sqrt(5), abs=1e-6)
        assert 0.0 < result.zeta < math.pi / 4

    def test_search_agrees_across_densities(self):
        coarse = hardy_search(grid_density=16)
        dense = hardy_search(grid_density=24)
        assert abs(coarse.p_star - dense.p_star) <= 1e-6

    def test_search_is_deterministic(self):
        first = hardy_search(grid_density=12, workers=1).to_dict()
        second = hardy_search(grid_density=12, workers=3).to_dict()
        assert first == second

    def test_result_reports_probabilities_by_name(self):
        data = hardy_search(grid_density=12).to_dict()
        assert data["feasible"] is True
        assert set(data["p_zero"]) == {
            "a_prime_plus_b_prime_plus",
            "a_plus_b_prime_minus",
            "a_prime_minus_b_plus",
        }
        assert set(data["settings"]) == {"a", "a_prime", "b", "b_prime"}
        assert data["concurrence"] >= HARDY_MIN_CONCURRENCE

    @pytest.mark.parametrize("density, tolerance", [(4, 1e-10), (16, 0.0), (16, -1.0)])
    def test_invalid_search_parameters(self, density, tolerance):
        with pytest.raises(DomainError):
            hardy_search(grid_density=density, refine_tolerance=tolerance)
