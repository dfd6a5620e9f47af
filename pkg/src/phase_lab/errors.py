"""Exception types shared across the package."""


class InputError(ValueError):
    """Raised for out-of-range parameters, indices, or malformed input."""


class FormatError(InputError):
    """Raised when an instance or graph file violates its line format."""


class GenerationExhausted(RuntimeError):
    """A generator ran out of attempts or iterations.

    ``attempts`` is kept on the exception because the number of draws it took
    to fail is itself a frequency measurement.
    """

    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts
