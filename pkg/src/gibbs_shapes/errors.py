"""Exception hierarchy.

Numerical failures (``NumericalError`` subclasses) map to CLI exit code 3,
input problems (``ConfigError`` and friends) to exit code 2.
"""


class GibbsShapesError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(GibbsShapesError, ValueError):
    """Invalid user input: model spec, CLI flag, config file."""


class ModelSpecError(ConfigError):
    pass


class ExpressionError(ConfigError):
    pass


class ExpressionSyntaxError(ExpressionError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


class UnknownIdentifier(ExpressionError):
    def __init__(self, name, offset):
        super().__init__(f"unknown identifier {name!r} at byte offset {offset}")
        self.name = name
        self.offset = offset


class UnsupportedDerivative(ExpressionError):
    def __init__(self, name):
        super().__init__(f"derivative of {name}() is not supported")
        self.name = name


class NumericalError(GibbsShapesError, ArithmeticError):
    pass


class RangeError(NumericalError):
    pass


class InconclusiveLimit(NumericalError):
    def __init__(self, message, probes=None):
        super().__init__(message)
        self.probes = probes or []


class NoRoot(NumericalError):
    pass


class DivergentSeries(NumericalError):
    pass


class NonConvergedTail(NumericalError):
    pass


class RegimeMismatch(GibbsShapesError, ValueError):
    pass


class EmptyPartition(GibbsShapesError, ValueError):
    pass


class OverlappingIntervals(GibbsShapesError, ValueError):
    pass


class EmptyGrid(GibbsShapesError, ValueError):
    pass
