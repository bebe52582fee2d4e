"""Exception types shared across the package."""


class NumericalError(ArithmeticError):
    """A computation produced non-finite values or failed to converge."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []
