"""Custom exceptions for the fractional delay equation analyzer."""


class FddeError(Exception):
    """Base exception for all analyzer errors."""
    pass


class ValidationError(FddeError):
    """Raised when a parameter or domain object fails validation."""

    prefix = "Validation error"

    def __init__(self, message: str):
        self.detail = message
        super().__init__(f"{self.prefix}: {message}")


class ConfigError(ValidationError):
    """Raised when a solver grid, sweep range or config file is invalid."""

    prefix = "Config error"


class UsageError(FddeError):
    """Raised when the command line cannot be parsed."""

    def __init__(self, message: str):
        super().__init__(f"Usage error: {message}")


class NumericalError(FddeError):
    """Base for failures of a numerical routine on a valid input."""
    pass


class DomainError(NumericalError):
    """Raised when a formula is evaluated outside the region where it is defined."""

    def __init__(self, operation: str, reason: str):
        self.operation = operation
        self.reason = reason
        super().__init__(f"{operation}: {reason}")


class BoundaryError(NumericalError):
    """Raised when (a, b) sits on a measure-zero boundary of the stability trichotomy."""

    def __init__(self, a: float, b: float):
        self.a = a
        self.b = b
        super().__init__(f"(a, b) = ({a!r}, {b!r}) lies on a stability boundary")


class ConsistencyError(NumericalError):
    """Raised when a theorem predicate and the general classifier disagree."""

    def __init__(self, theorem_id: str, expected: str, actual: str):
        self.theorem_id = theorem_id
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"Theorem {theorem_id} implies {expected} but the classifier returned {actual}"
        )


class NoCrossingError(NumericalError):
    """Raised when the characteristic scan finds no imaginary-axis crossing."""

    def __init__(self, a: float, b: float, alpha: float):
        self.a = a
        self.b = b
        self.alpha = alpha
        super().__init__(
            f"No imaginary-axis crossing found for a={a!r}, b={b!r}, alpha={alpha!r}"
        )


class SeriesTooShortError(NumericalError):
    """Raised when a time series is too short for the requested analysis."""

    def __init__(self, length: int, required: int):
        self.length = length
        self.required = required
        super().__init__(f"Series has {length} samples, at least {required} required")


class DegenerateSeriesError(NumericalError):
    """Raised when a time series has zero variance."""

    def __init__(self, message: str = "series has zero variance"):
        super().__init__(message)


class StorageError(FddeError):
    """Raised when there's an error writing or reading result files."""

    def __init__(self, message: str):
        super().__init__(f"Storage error: {message}")
