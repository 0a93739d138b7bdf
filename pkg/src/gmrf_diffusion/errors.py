"""Exception types shared across the package."""


class GmrfDiffusionError(Exception):
    """Base class for all package errors."""


class ConfigError(GmrfDiffusionError):
    """Scenario file or parameter set is malformed or inconsistent."""


class InvalidEdge(ConfigError):
    """Edge references an out-of-range node or is a self-loop."""


class SubgraphViolation(ConfigError):
    """A dependency edge has no matching communication edge."""


class InvalidParameter(ConfigError):
    """A model parameter is outside its admissible range."""


class SingularPair(GmrfDiffusionError):
    """An edge covariance makes the 2x2 marginal singular or indefinite."""


class NotPositiveDefinite(GmrfDiffusionError):
    """A matrix required to be positive definite failed factorization."""


class DimensionMismatch(GmrfDiffusionError):
    """Array arguments do not have mutually consistent shapes."""


class InvalidSupport(ConfigError):
    """Requested sparse support size exceeds the vector length."""


class InvalidSpec(ConfigError):
    """Threshold specification violates its side conditions."""


class Diverged(GmrfDiffusionError):
    """An adaptive run produced non-finite or absurdly large estimates."""


class InconsistentModel(GmrfDiffusionError):
    """Precision and covariance matrices are not inverses of each other."""


class TooLarge(GmrfDiffusionError):
    """Dense materialization requested beyond the supported size cap."""


class Unstable(GmrfDiffusionError):
    """Spectral radius >= 1: the requested steady-state quantity diverges."""


class NoConvergence(GmrfDiffusionError):
    """Iterative solver exceeded its iteration cap."""


class UnknownPreset(ConfigError):
    """Preset name is not one of the published experiment presets."""


class InstabilityError(GmrfDiffusionError):
    """Configured step-sizes violate the mean-stability bound."""
