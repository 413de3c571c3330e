"""Exception types shared across the package."""


class FRWError(Exception):
    """Base class for all package errors."""


class DomainError(FRWError, ValueError):
    """Input lies outside the domain where a formula is defined."""


class DegenerateMetricError(DomainError):
    """Metric determinant vanishes (or is not finite) at the sample point."""


class SingularityError(DomainError):
    """Scale factor is zero/negative or a coordinate singularity was hit."""


class ConstraintViolation(FRWError, ValueError):
    """Initial data or state does not satisfy a required constraint."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InadmissibleStateError(ConstraintViolation):
    """State violates an admissibility condition such as H^2 >= 0."""


class IntegrationBudgetError(FRWError, RuntimeError):
    """The integrator exceeded its step budget."""


class QuadratureResolutionError(FRWError, ValueError):
    """Trajectory is too coarse for the requested quadrature."""


class InconsistencyError(FRWError, RuntimeError):
    """An internal consistency check that must never fail did fail."""


class ConfigError(FRWError, ValueError):
    """Malformed scenario configuration; ``field`` names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field
