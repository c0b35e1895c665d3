import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.qcorr.analysis import (
    CLASSICAL_BOUND,
    TSIRELSON_BOUND,
    ChshSettings,
    CosineFringe,
    chsh_analytic,
    chsh_lhv,
    chsh_monte_carlo,
    chsh_report,
    chsh_statistic,
    load_scan_report,
    scan_settings,
    visibility,
)
from src.qcorr.config import CANONICAL_CHSH_ANGLES
from src.qcorr.errors import DomainError
from src.qcorr.export import write_scan_csv
from src.qcorr.types import PairSpec, SpinKind


def canonical(species: SpinKind) -> ChshSettings:
    return ChshSettings(*CANONICAL_CHSH_ANGLES[species])


class TestChshStatistic:
    def test_constant_correlation(self):
        settings = ChshSettings(0.0, 1.0, 2.0, 3.0)
        assert chsh_statistic(lambda t1, t2: 1.0, settings) == 2.0

    def test_table_source(self):
        settings = ChshSettings(0.0, 1.0, 2.0, 3.0)
        table = {pair: value for pair, value in zip(settings.pairs(), (1.0, -1.0, 1.0, 1.0))}
        assert chsh_statistic(table, settings) == 4.0

    def test_missing_value(self):
        settings = ChshSettings(0.0, 1.0, 2.0, 3.0)
        with pytest.raises(DomainError):
            chsh_statistic({(0.0, 2.0): 1.0}, settings)
        with pytest.raises(DomainError):
            chsh_statistic(lambda t1, t2: math.nan, settings)

    def test_out_of_range_value(self):
        with pytest.raises(DomainError):
            chsh_statistic(lambda t1, t2: 1.5, ChshSettings(0.0, 1.0, 2.0, 3.0))

    def test_non_finite_setting(self):
        with pytest.raises(DomainError):
            ChshSettings(0.0, math.inf, 0.0, 0.0)

    @pytest.mark.parametrize("species", list(SpinKind))
    def test_analytic_reaches_tsirelson(self, species):
        result = chsh_analytic(PairSpec.canonical(species), canonical(species))
        assert result.S == pytest.approx(2 * math.sqrt(2), abs=1e-9)
        assert result.bound_violated


class TestChshMonteCarlo:
    @pytest.mark.parametrize("species", list(SpinKind))
    def test_model_violates_classical_bound(self, species):
        result = chsh_monte_carlo(PairSpec.canonical(species), canonical(species), 50_000, seed=3)
        assert result.n_per_pair == 50_000
        assert abs(result.S - TSIRELSON_BOUND) <= 5 * result.stderr
        assert result.S > CLASSICAL_BOUND

    @pytest.mark.parametrize("species", list(SpinKind))
    def test_lhv_respects_classical_bound(self, species):
        result = chsh_lhv(PairSpec.canonical(species), canonical(species), 50_000, seed=3)
        assert result.S <= CLASSICAL_BOUND + 5 * result.stderr

    def test_deterministic(self):
        spec = PairSpec.canonical(SpinKind.PHOTON)
        first = chsh_monte_carlo(spec, canonical(SpinKind.PHOTON), 10_000, seed=9).to_dict()
        second = chsh_monte_carlo(spec, canonical(SpinKind.PHOTON), 10_000, seed=9).to_dict()
        assert first == second

    def test_report(self):
        spec = PairSpec.canonical(SpinKind.HALF)
        settings = canonical(SpinKind.HALF)
        report = chsh_report(
            chsh_analytic(spec, settings),
            chsh_monte_carlo(spec, settings, 5_000, seed=1),
            chsh_lhv(spec, settings, 5_000, seed=1),
        )
        assert set(report["per_pair_P"]) == {"P(a,b)", "P(a,b')", "P(a',b)", "P(a',b')"}
        assert report["bound_violated"] is True
        assert "stderr" in report["monte_carlo"]
        assert report["lhv_baseline"]["n_per_pair"] == 5_000


class TestScan:
    @pytest.mark.parametrize("species", list(SpinKind))
    def test_model_matches_oracle(self, species):
        report = scan_settings(PairSpec.canonical(species), np.linspace(0, 2 * math.pi, 1001))
        assert len(report) == 1001
        assert report.max_abs_diff <= 1e-12
        assert np.all(np.isnan(report.mc_P))

    def test_monte_carlo_column(self):
        spec = PairSpec.canonical(SpinKind.PHOTON)
        grid = np.linspace(0, math.pi, 5)
        report = scan_settings(spec, grid, n_pairs=50_000, seed=2)
        assert not np.any(np.isnan(report.mc_P))
        assert_allclose(report.mc_P, report.model_P, atol=0.05)

    def test_empty_grid(self):
        with pytest.raises(DomainError):
            scan_settings(PairSpec.canonical(SpinKind.PHOTON), [])

    def test_load_recomputes_abs_diff(self, tmp_path):
        report = scan_settings(PairSpec.canonical(SpinKind.HALF), np.linspace(0, 1, 11))
        path = write_scan_csv(tmp_path / "scan.csv", report)
        text = path.read_text(encoding="utf-8").splitlines()
        # Corrupt the stored abs_diff column; loading must not trust it
        corrupted = [text[0]] + [",".join(line.split(",")[:-1] + ["9.0"]) for line in text[1:]]
        path.write_text("\n".join(corrupted) + "\n", encoding="utf-8")
        loaded = load_scan_report(path)
        assert_allclose(loaded.dtheta, report.dtheta, rtol=0, atol=0)
        assert loaded.max_abs_diff == report.max_abs_diff


class TestVisibility:
    def test_full_fringe(self):
        assert visibility(CosineFringe(offset=0.5, amplitude=0.5)) == 1.0

    def test_partial_fringe(self):
        assert visibility(CosineFringe(offset=1.0, amplitude=0.25)) == pytest.approx(0.25)

    def test_flat_samples(self):
        assert visibility(np.full(10, 0.5)) == 0.0

    def test_invalid_patterns(self):
        with pytest.raises(DomainError):
            visibility([])
        with pytest.raises(DomainError):
            visibility(np.zeros(5))
        with pytest.raises(DomainError):
            visibility([-0.1, 0.5])

    def test_fringe_is_callable(self):
        fringe = CosineFringe(offset=0.5, amplitude=0.5, period=2.0)
        assert_allclose(fringe([0.0, 1.0, 2.0]), [1.0, 0.0, 1.0], atol=1e-15)
