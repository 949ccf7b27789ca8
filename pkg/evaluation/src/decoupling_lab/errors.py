"""Exception types raised across the lab."""


class DecouplingLabError(Exception):
    """Base class for lab errors."""


class InvalidParameterError(DecouplingLabError, ValueError):
    """A parameter is outside the range an operation accepts."""


class InvalidInputError(DecouplingLabError, ValueError):
    """Input data (a field, a profile file, a binary dump) is malformed."""


class UndefinedRatioError(DecouplingLabError, ArithmeticError):
    """A ratio was requested whose denominator vanishes identically."""
