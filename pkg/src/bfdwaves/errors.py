"""Exception types raised across the package."""


class ParameterDomainError(ValueError):
    """Model parameters fall outside the admissible range."""


class NotWellPosedError(ValueError):
    """Sign pattern of (b, d, a, c) is not linearly well posed."""


class SymbolParityError(ValueError):
    """A Fourier multiplier would map a real field to a complex one."""


class SingularModeError(ArithmeticError):
    def __init__(self, k, det):
        super().__init__(f"mode matrix is singular at k={k} (det={det:.3e})")
        self.k = k
        self.det = det


class DegenerateIterateError(ArithmeticError):
    """The stabilizing factor of the profile iteration is 0/0."""


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual_history=()):
        super().__init__(message)
        self.residual_history = list(residual_history)


class StepFailure(RuntimeError):
    """An implicit stage did not converge.

    ``partial`` holds whatever trajectory had been recorded before the failure
    when the error escapes :func:`bfdwaves.integrator.evolve`.
    """

    def __init__(self, message, step=None, time=None, last_increment=None):
        super().__init__(message)
        self.step = step
        self.time = time
        self.last_increment = last_increment
        self.partial = None
