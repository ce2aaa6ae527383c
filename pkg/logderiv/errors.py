"""Exception hierarchy shared by the library, CLI and dashboard"""


class LogDerivError(Exception):
    """Base class for every error raised by logderiv"""


class InvalidArgumentError(LogDerivError, ValueError):
    """An argument is outside the documented domain of an operation"""


class DomainError(LogDerivError, ValueError):
    """Inputs are individually valid but jointly outside a formula's range"""


class PoleError(LogDerivError, ZeroDivisionError):
    """A meromorphic function was evaluated at one of its poles"""


class ConfluentLimitError(LogDerivError):
    """Coincident shifts were passed to a formula stated for distinct shifts"""


class SamplingError(LogDerivError, RuntimeError):
    """A Haar draw could not be reduced to a consistent set of eigenangles"""


class ConfigError(LogDerivError):
    """An environment variable could not be parsed"""


class VerificationError(LogDerivError, AssertionError):
    """An exact identity did not hold"""
