from typing import Any, Dict, Optional


class LintestError(Exception):
    """Base error. Carries a CLI exit code and a JSON-ready detail."""

    exit_code = 2

    def __init__(self, error: str, details: Optional[Any] = None):
        super().__init__(error if details is None else f"{error}: {details}")
        self.detail: Dict[str, Any] = {"error": error}
        if details is not None:
            self.detail["details"] = details


class DomainError(LintestError):
    def __init__(self, details: Any):
        super().__init__("Domain error", details)


class CapacityError(LintestError):
    exit_code = 3

    def __init__(self, what: str, value: Any, cap: Any):
        super().__init__(
            "Capacity exceeded",
            f"{what} is {value}, cap is {cap}"
        )


class ConfigurationError(LintestError):
    def __init__(self, details: Any):
        super().__init__("Configuration error", details)


class EmptyConstraintError(LintestError):
    def __init__(self, details: Any = "constraint has no satisfying point"):
        super().__init__("Empty constraint", details)


class InvalidObservableError(LintestError):
    def __init__(self, details: Any):
        super().__init__("Invalid binary observable", details)


class InvalidMeasurementError(LintestError):
    def __init__(self, details: Any):
        super().__init__("Invalid measurement", details)


class InvalidSpectrumError(LintestError):
    def __init__(self, details: Any):
        super().__init__("Invalid spectrum", details)


class NotOracularizableError(LintestError):
    def __init__(self, x: Any, y: Any, residual: float):
        super().__init__(
            "Strategy is not oracularizable",
            {"questions": [repr(x), repr(y)], "commutator": residual}
        )


class PreconditionError(LintestError):
    def __init__(self, details: Any):
        super().__init__("Precondition failed", details)


class ProtocolError(LintestError):
    exit_code = 1

    def __init__(self, details: Any):
        super().__init__("Protocol error", details)


class UsageError(LintestError):
    def __init__(self, details: Any):
        super().__init__("Usage error", details)


class SuiteFailure(LintestError):
    exit_code = 1

    def __init__(self, failed: Any):
        super().__init__("Acceptance checks failed", failed)
