"""Exception hierarchy shared by every module of the package."""


class DelayMemError(Exception):
    """Base class for all errors raised by delaymem."""


class ModelError(DelayMemError, ValueError):
    """Invalid problem instance."""


class DimensionMismatch(ModelError):
    pass


class HorizonTooShort(ModelError):
    pass


class NegativeDelay(ModelError):
    pass


class KernelDomainTooShort(ModelError):
    pass


class OutOfDomain(ModelError):
    pass


class ParseError(ModelError):
    """Malformed config document.

    ``field`` names the offending key (dotted path) and ``line`` is the
    line of a JSON syntax error, when known.
    """

    def __init__(self, message, field=None, line=None):
        parts = []
        if field is not None:
            parts.append(f"field '{field}'")
        if line is not None:
            parts.append(f"line {line}")
        prefix = f"{', '.join(parts)}: " if parts else ""
        super().__init__(prefix + message)
        self.field = field
        self.line = line


class GridError(ModelError):
    """Step size incompatible with the delay or the horizon."""


class GridMismatch(GridError):
    pass


class NumericalFailure(DelayMemError, ArithmeticError):
    pass


class KernelNotSeparable(ModelError):
    pass


class TargetKernelIncompatible(ModelError):
    pass


class NotApplicable(ModelError):
    """Algebraic test called outside its domain (e.g. nonzero delay)."""


class EmptyControlRegion(ModelError):
    pass
