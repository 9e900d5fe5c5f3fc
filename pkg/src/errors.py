"""
Error types for ChainBound
"""


class ChainboundError(Exception):
    """Base error for the package."""


class InputValidationError(ChainboundError, ValueError):
    """Inputs violate a range or shape contract."""


class CertificateInvalidError(ChainboundError, ValueError):
    """A drift/minorization or coupling certificate fails one of its inequalities."""

    def __init__(self, inequality: str, detail: str = ""):
        self.inequality = inequality
        message = f"certificate violates {inequality}"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)


class CertificationFailure(ChainboundError):
    """No certificate could be produced for a chain; carries the best attempt."""

    def __init__(self, message: str, best_attempt: dict = None):
        self.best_attempt = best_attempt or {}
        super().__init__(message)


class ProvenanceError(ChainboundError):
    """Bound and estimate do not describe the same configuration."""


class BudgetExceededError(ChainboundError):
    """A computation would exceed its memory or enumeration budget."""


class ConfigError(ChainboundError):
    """Run configuration is malformed or fails schema validation."""

    def __init__(self, message: str, line: int = None, column: int = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class NumericalError(ChainboundError, ArithmeticError):
    """Internal numerical failure, e.g. a root bracket that cannot be expanded."""
