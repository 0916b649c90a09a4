"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Raised when an input value violates a documented invariant."""


class CorpusFormatError(ValidationError):
    """Raised for malformed corpus files. Carries a 1-based line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CheckpointError(RuntimeError):
    """Raised when a model checkpoint cannot be read or is inconsistent."""


class DivergenceError(RuntimeError):
    """Raised when training produces a non-finite loss."""
