"""Exception hierarchy shared by all hpdual modules."""

from __future__ import annotations


class HpDualError(Exception):
    """Base class for every error raised by this package."""


class NonIntegrableTail(HpDualError):
    pass


class NoConvergence(HpDualError):
    def __init__(self, message: str, *, observed_ratio: float | None = None):
        super().__init__(message)
        self.observed_ratio = observed_ratio


class DivergentTail(HpDualError):
    pass


class InvalidBracket(HpDualError):
    pass


class OrderUnavailable(HpDualError):
    pass


class InvalidDilation(HpDualError):
    pass


class InvalidB(HpDualError):
    pass


class InvalidParameter(HpDualError, ValueError):
    pass


class SingularSystem(HpDualError):
    pass


class HypothesisFailure(HpDualError):
    def __init__(self, message: str, *, check: str | None = None):
        super().__init__(message)
        self.check = check


class DegenerateProfile(HpDualError):
    pass


class DecayViolation(HpDualError):
    pass


class GridMismatch(HpDualError):
    pass


class ConfigError(HpDualError):
    def __init__(self, message: str, *, field: str | None = None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field
