"""Exception types raised by anisocap."""


class DimensionError(ValueError):
    """Input vector does not match the dimension of the anisotropy."""


class ConvergenceError(RuntimeError):
    """An iterative routine stopped before reaching its tolerance.

    The achieved residual is kept on the exception so callers can decide
    whether the partial answer is usable.
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(f"{message} (achieved residual {residual:.3e})")
        self.residual = residual


class GeometryError(ValueError):
    """Domain or grid cannot be resolved with the requested parameters."""
