"""Exception hierarchy shared by every module of the package."""


class EchoError(Exception):
    """Base class for all errors raised by tfim_gyro."""


class InvalidChainError(EchoError, ValueError):
    """Chain geometry or energy scales are out of range."""


class InvalidFieldError(EchoError, ValueError):
    pass


class NegativeTimeError(EchoError, ValueError):
    pass


class CutoffRangeError(EchoError, ValueError):
    pass


class ApproximationSingularError(EchoError, ArithmeticError):
    """A denominator of the cutoff closed form is below the configured floor."""


class DenseSizeCapError(EchoError, ValueError):
    pass


class ValleyTooShallowError(EchoError):
    """The echo never reaches 1/2 inside the search window."""


class CrossingNotBracketedError(EchoError):
    pass


class FlatScanError(EchoError):
    """The field scan shows no usable echo contrast."""


class GridError(EchoError, ValueError):
    pass


class ConfigError(EchoError, ValueError):
    pass


class InvalidInputError(EchoError, ValueError):
    """Arguments violate an operation's preconditions."""
