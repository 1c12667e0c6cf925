"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Bad user input: malformed files, out-of-range parameters, shape mismatches."""


class NumericalError(ArithmeticError):
    """A linear-algebra or message-passing step produced a non-finite or singular result."""
