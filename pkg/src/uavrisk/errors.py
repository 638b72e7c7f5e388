"""Exception taxonomy shared by the whole toolkit.

Input/config problems (bad arguments, malformed files, inconsistent
mission definitions) and computation failures (planning, sampling,
fitting) are kept apart so the CLI can map them to distinct exit codes.
"""


class UavRiskError(Exception):
    """Base class for all toolkit errors."""


class InputError(UavRiskError):
    """Caller supplied invalid arguments or inconsistent data."""


class ConfigError(InputError):
    """Mission or component configuration is invalid."""


class LoadError(InputError):
    """A file could not be parsed or failed schema validation."""


class ComputationError(UavRiskError):
    """A well-formed request could not be computed."""


class PlanningError(ComputationError):
    """No feasible path between the requested endpoints."""


class SamplingError(ComputationError):
    """Rejection sampling exhausted its attempt budget."""


class FitError(ComputationError):
    """Regression problem is degenerate (e.g. rank-deficient basis)."""
