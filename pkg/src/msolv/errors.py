"""Exceptions shared across the package."""


class MsolvError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(MsolvError):
    """Matrix/vector shapes are incompatible for the requested operation."""


class RingMismatch(MsolvError):
    """Operands live over different moduli or coefficient rings."""


class MixedVariant(MsolvError):
    """Group elements of incompatible kinds (or degrees/moduli) were combined."""


class CapExceeded(MsolvError):
    """A closure enumeration grew past its configured cap."""

    def __init__(self, cap: int, reached: int):
        super().__init__(f"closure exceeded cap {cap} (at least {reached} elements)")
        self.cap = cap
        self.reached = reached


class IndexOutOfRange(MsolvError):
    """An element or generator index does not exist in the group."""


class NotNormal(MsolvError):
    """The given subgroup is not normal in its parent."""


class NotSurjective(MsolvError):
    """The given homomorphism is not surjective where surjectivity is required."""


class NotHomomorphism(MsolvError):
    """Generator images do not extend to a homomorphism."""


class TooLarge(MsolvError):
    """Input exceeds the documented size bound of the algorithm."""


class BadGeneratorIndex(MsolvError):
    """A free-word letter refers to a generator outside 1..rank."""


class WordTooLong(MsolvError):
    """A free word exceeds the documented length cap."""


class RelatorNotInKernel(MsolvError):
    """A claimed relator does not map to the identity in the quotient."""


class LevelMismatch(MsolvError):
    """A tower level is absent or does not divide as required."""


class PreconditionViolated(MsolvError):
    """An arithmetic precondition of an experiment does not hold."""


class ParseError(MsolvError):
    """Group-spec text could not be parsed.

    Carries 1-based line and column of the offending position.
    """

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col
