"""Exception types shared across the toolkit."""


class OodbenchError(Exception):
    """Base class for all toolkit errors."""


class DatasetError(OodbenchError):
    """Malformed or invalid dataset file / container."""


class SplitError(OodbenchError):
    """Invalid benchmark split request or result."""


class ScorerError(OodbenchError):
    """Scorer fitting or scoring failure."""


class MetricError(OodbenchError):
    """Invalid metric input."""


class TheoryError(OodbenchError):
    """Invalid input to the discrete information engine."""


class SynthError(OodbenchError):
    """Invalid synthetic data request."""


class ConfigError(OodbenchError):
    """Invalid run configuration or external score file."""
