"""Exception types raised by wellscatter."""


class EvanescentRegimeError(ValueError):
    """Raised when a frequency or energy lies at or below the outer cutoff."""


class UnwrapAmbiguityError(ValueError):
    """Raised when adjacent phase samples differ by exactly pi."""


class PeakRefinementError(ValueError):
    """Raised when an envelope has no single well-defined maximum."""

    def __init__(self, message, candidates=()):
        super().__init__(message)
        self.candidates = list(candidates)


class TraceFormatError(ValueError):
    """Raised for malformed trace files; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
