"""
Quantum correlation lab.

Local complex-amplitude model of entangled-pair correlations, checked against
Born-rule predictions, seeded two-station event simulation, CHSH and fringe
analysis, double-slit continuum patterns and a Hardy configuration search.
"""

from .types import (
    AnalyzerSetting,
    ComplexAmplitude,
    JointDistribution,
    PairSpec,
    SpinKind,
)
from .amplitude import (
    bell_correlation,
    bell_correlation_from_U,
    coincidence_probability,
    correlation_U,
    joint_distribution,
    local_amplitude,
    pair_correlation,
)
from .oracle import (
    BellKind,
    HardyResult,
    bell_state,
    correlation_qm,
    hardy_search,
    hardy_settings_for,
    joint_probs_qm,
)
from .events import (
    RunConfig,
    coincidence_match,
    estimate_bell_correlation,
    run_events,
    simulate_matched,
)
from .analysis import ChshSettings, chsh_statistic, scan_settings, visibility
from .continuum import SlitGeometry, coincidence_pattern, twoslit_correlation
from .hardy_fit import fit_local_amplitudes, model_joint_prob
from .config import ExperimentConfig, load_config
from .errors import ConfigError, DomainError, IntegrityError, QCorrError

__all__ = [
    # Types
    "AnalyzerSetting",
    "ComplexAmplitude",
    "JointDistribution",
    "PairSpec",
    "SpinKind",
    # Amplitude model
    "bell_correlation",
    "bell_correlation_from_U",
    "coincidence_probability",
    "correlation_U",
    "joint_distribution",
    "local_amplitude",
    "pair_correlation",
    # Quantum oracle
    "BellKind",
    "HardyResult",
    "bell_state",
    "correlation_qm",
    "hardy_search",
    "hardy_settings_for",
    "joint_probs_qm",
    # Event engine
    "RunConfig",
    "coincidence_match",
    "estimate_bell_correlation",
    "run_events",
    "simulate_matched",
    # Analysis
    "ChshSettings",
    "chsh_statistic",
    "scan_settings",
    "visibility",
    # Continuum
    "SlitGeometry",
    "coincidence_pattern",
    "twoslit_correlation",
    # Hardy fit
    "fit_local_amplitudes",
    "model_joint_prob",
    # Config and errors
    "ExperimentConfig",
    "load_config",
    "ConfigError",
    "DomainError",
    "IntegrityError",
    "QCorrError",
]
