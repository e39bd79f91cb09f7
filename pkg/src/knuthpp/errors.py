"""Exception hierarchy shared by every module of the toolkit."""


class PatternError(ValueError):
    """Base class for all domain errors raised by knuthpp."""


class EmptyPattern(PatternError):
    pass


class DegenerateSpan(PatternError):
    pass


class OutOfSpan(PatternError):
    pass


class OutOfWindow(PatternError):
    pass


class ThinningBound(PatternError):
    pass


class NoParents(PatternError):
    pass


class PackingFailure(PatternError):
    pass


class ShapeExceedsWindow(PatternError):
    pass


class RangeTooLarge(PatternError):
    pass


class NegativeK(PatternError):
    pass


class GridTooShort(PatternError):
    pass


class InsufficientSims(PatternError):
    pass


class BadNorm(PatternError):
    pass


class FitDiverged(PatternError):
    pass


class DegenerateX(PatternError):
    pass


class ParseError(PatternError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ConfigError(PatternError):
    pass
