"""Exception types shared across the package."""


class SigpoleError(Exception):
    """Base class for errors raised by this package."""


class InvalidPairError(SigpoleError, ValueError):
    """A position pair is degenerate or out of range."""


class DimensionError(SigpoleError, ValueError):
    """Lengths or dimensions of two objects do not agree."""


class DomainError(SigpoleError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class SizeError(SigpoleError, ValueError):
    """The requested size exceeds what the chosen algorithm supports."""


class ParseError(SigpoleError, ValueError):
    """A textual word / pairing / position-set spec could not be parsed."""


class InternalConsistencyError(SigpoleError, RuntimeError):
    """An identity that must hold by construction was violated."""


class NumericError(SigpoleError, RuntimeError):
    """An iterative numeric procedure failed to reach its target.

    Carries diagnostic state so callers can report how far it got.
    """

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics
