"""Exception hierarchy shared by every module."""


class LabError(Exception):
    """Base class for all errors raised by blowup_lab."""


class InvalidArgument(LabError, ValueError):
    pass


class GridMismatch(LabError, ValueError):
    pass


class NonFiniteState(LabError, FloatingPointError):
    """A field acquired NaN or Inf values; the solver treats this as blow-up."""


class ZeroField(LabError, ValueError):
    pass


class DomainTooSmall(LabError):
    """The truncated domain cannot hold the requested object; enlarge L."""


class CFLViolation(LabError, ValueError):
    pass


class UnsupportedP(InvalidArgument):
    pass


class ResolutionTooCoarse(LabError, ValueError):
    pass


class NoWitnessFound(LabError):
    pass


class SnapshotGap(LabError):
    pass


class ConfigError(LabError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ParseError(ConfigError):
    pass


class UnknownKey(ConfigError):
    pass


class InvalidValue(ConfigError):
    pass
