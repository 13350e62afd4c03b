"""Exception hierarchy shared across the package."""


class AggflowError(Exception):
    """Base class for all package errors."""


class DomainError(AggflowError, ValueError):
    """An argument lies outside the domain of a singular function."""


class ShapeMismatch(AggflowError, ValueError):
    """Field arrays do not match the grid they are used with."""


class NonPositiveCoefficient(AggflowError, ValueError):
    """A coefficient that must be strictly positive is not."""


class SolverError(AggflowError, RuntimeError):
    """Base for failures that should make the caller reduce the time step."""


class NewtonDiverged(SolverError):
    pass


class StepNotAdmissible(SolverError):
    pass


class LinearSolveFailed(SolverError):
    pass


class OuterNoConvergence(SolverError):
    pass


class AbortedAfterRetries(SolverError):
    pass


class ConfigError(AggflowError):
    pass


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError, ValueError):
    pass


class IoError(AggflowError, OSError):
    """Reading or writing a result file failed."""


class InvariantViolation(AggflowError):
    """A checked run property (energy audit, mass, confinement) failed."""
