"""Exception hierarchy shared by all subpackages."""


class SignedGLError(Exception):
    """Base class for every error raised by signedgl."""


class ParameterError(SignedGLError, ValueError):
    pass


class SymmetryError(SignedGLError, ValueError):
    def __init__(self, max_deviation):
        self.max_deviation = float(max_deviation)
        super().__init__(f"matrix is not symmetric (max |M - M^T| = {self.max_deviation:.3e})")


class EdgeIndexError(SignedGLError, IndexError):
    pass


class DimensionError(SignedGLError, ValueError):
    pass


class EmptyDataError(SignedGLError, ValueError):
    pass


class InfeasibleProblemError(SignedGLError):
    """The trace and complementarity constraints cannot hold simultaneously."""


class NumericalError(SignedGLError, ArithmeticError):
    pass


class ShiftTooSmallError(NumericalError):
    pass


class DivergenceError(NumericalError):
    def __init__(self, iteration, what="iterate"):
        self.iteration = iteration
        super().__init__(f"non-finite {what} at iteration {iteration}")


class UndefinedMetricError(SignedGLError, ValueError):
    pass
