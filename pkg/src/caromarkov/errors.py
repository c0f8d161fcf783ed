"""Exception hierarchy shared by every caromarkov module."""


class CaromarkovError(Exception):
    """Base class for all errors raised by the package."""


class ValidationError(CaromarkovError, ValueError):
    """An argument or data value violates a documented invariant."""


class ParseError(CaromarkovError, ValueError):
    """A score sheet line could not be read."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyInputError(ParseError):
    """The score sheet holds no data lines."""


class DivergenceError(CaromarkovError, ArithmeticError):
    """A series that should converge does not (spectral radius >= 1)."""


class DegenerateError(CaromarkovError, ValueError):
    """The two eigenvalues coincide, so Y is undefined."""


class DegenerateFitError(CaromarkovError):
    """No interior Markov fit exists; ``fallback`` holds the Bernoulli model."""

    def __init__(self, message, fallback=None):
        super().__init__(message)
        self.fallback = fallback


class ConvergenceError(CaromarkovError):
    """Every multi-start run failed to converge; ``best`` is the best iterate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class InfeasibleError(CaromarkovError):
    """No transition matrix satisfies the constraints for the given triple."""

    def __init__(self, message, triple=None):
        super().__init__(message)
        self.triple = triple
