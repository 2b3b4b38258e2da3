"""Exception hierarchy shared by every module."""

from __future__ import annotations


class SpreadRiskError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InputError(SpreadRiskError):
    exit_code = 3


class NetworkParseError(InputError):
    """Raised when a network file does not follow its schema."""

    def __init__(self, message: str, *, line: int | None = None, field: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.field = field


class NetworkValidationError(InputError):
    def __init__(self, violations: list[str]):
        super().__init__("invalid network: " + "; ".join(violations))
        self.violations = list(violations)


class BoundsViolationError(InputError):
    """A rate lies outside its [lower, upper] range."""


class DomainError(InputError):
    """Nonpositive argument to a logarithmic transform."""


class ScheduleError(InputError):
    pass


class UnsupportedNetworkError(InputError):
    pass


class InfeasibleDiscountError(SpreadRiskError):
    """``A - rI`` is not Hurwitz, so the discounted cost diverges."""

    exit_code = 4

    def __init__(self, r: float, abscissa: float, message: str | None = None):
        msg = message or (
            f"discount rate r={r:.12g} does not exceed the spectral abscissa "
            f"{abscissa:.12g}; rI - A is not a nonsingular M-matrix"
        )
        super().__init__(msg)
        self.r = r
        self.abscissa = abscissa


class InfeasibleProblemError(SpreadRiskError):
    exit_code = 4


class NumericalError(SpreadRiskError):
    exit_code = 5


class SolverError(SpreadRiskError):
    exit_code = 5

    def __init__(self, message: str, *, status: str | None = None, residuals: dict | None = None):
        super().__init__(message)
        self.status = status
        self.residuals = residuals or {}


class TimestepError(SpreadRiskError):
    """Per-step transition probability exceeds one."""

    exit_code = 3
