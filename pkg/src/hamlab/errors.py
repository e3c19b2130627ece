"""Exception hierarchy shared by all hamlab modules."""


class HamlabError(Exception):
    """Base class for every error raised by hamlab."""


class InvalidParameterError(HamlabError, ValueError):
    pass


class EvaluationError(HamlabError, ArithmeticError):
    """A user-supplied or constructed function produced a non-finite value."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DomainError(HamlabError, ValueError):
    """An operator received an argument outside its cone of definition."""


class SingularMatrixError(HamlabError, ZeroDivisionError):
    pass


class PreconditionError(HamlabError):
    """Input is not an approximate fixed point; carries the measured residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DivergenceError(HamlabError):
    """Iteration left the positive cone; ``last`` holds the final iterate."""

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last
