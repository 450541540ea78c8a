"""Exception hierarchy shared by the library, the analyses and the CLI."""

from typing import Optional, Sequence


class PTChainError(Exception):
    """Base class for every error raised by ptchain"""


class DomainError(PTChainError, ValueError):
    """Input outside the domain of an operation (bad site, bad parameter)"""


class ConfigError(DomainError):
    """Run configuration failed validation"""

    def __init__(self, message: str, key: Optional[str] = None, expected: Optional[str] = None):
        self.key = key
        self.expected = expected
        super().__init__(message)

    def __reduce__(self):
        return type(self), (self.args[0], self.key, self.expected)


class NumericError(PTChainError, ArithmeticError):
    """Numerical failure: non-finite input or an eigensolver that gave up"""


class ConvergenceError(NumericError):
    """QR iteration hit its iteration cap; keeps whatever eigenvalues converged"""

    def __init__(self, message: str, partial: Sequence[complex] = (), iterations: int = 0):
        self.partial = list(partial)
        self.iterations = iterations
        super().__init__(message)

    def __reduce__(self):
        return type(self), (self.args[0], self.partial, self.iterations)


class SweepError(NumericError):
    """A failure inside a sweep, annotated with the parameter point that failed"""

    def __init__(self, message: str, point: dict, cause: Optional[BaseException] = None):
        self.message = message
        self.point = dict(point)
        self.cause = cause
        where = ", ".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}" for k, v in self.point.items())
        text = f"{message} at {where}" if where else message
        if cause is not None:
            text = f"{text}: {cause}"
        super().__init__(text)

    # joblib ships worker exceptions back by pickling them
    def __reduce__(self):
        return type(self), (self.message, self.point, self.cause)
