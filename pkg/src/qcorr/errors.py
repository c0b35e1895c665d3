"""Exception hierarchy for qcorr."""


class QCorrError(Exception):
    """Base class for all qcorr errors."""


class DomainError(QCorrError, ValueError):
    """An input lies outside the mathematical domain of an operation."""


class IntegrityError(QCorrError):
    """Event streams violate a structural invariant (e.g. duplicate pair tags)."""


class ConfigError(QCorrError, ValueError):
    """Experiment configuration failed validation."""
