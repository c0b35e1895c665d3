import pytest

from src.qcorr.config import ExperimentConfig
from src.qcorr.types import PairSpec, SpinKind


@pytest.fixture
def photon_spec() -> PairSpec:
    return PairSpec.canonical(SpinKind.PHOTON)


@pytest.fixture
def half_spec() -> PairSpec:
    return PairSpec.canonical(SpinKind.HALF)


@pytest.fixture
def small_config(tmp_path) -> ExperimentConfig:
    """Small enough for the CLI commands and the selftest to finish in seconds."""
    return ExperimentConfig(
        n_pairs=20_000,
        grid_points=101,
        pattern_points=201,
        grid_density=16,
        dense_grid_density=24,
        fit_budget=60,
        fit_starts=4,
        out=tmp_path / "out",
    )


@pytest.fixture(autouse=True)
def fixed_threads(monkeypatch):
    monkeypatch.setenv("QCORR_THREADS", "2")
    monkeypatch.delenv("QCORR_LOG_DIR", raising=False)
