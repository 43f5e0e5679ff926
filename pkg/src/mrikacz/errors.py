"""Exception types shared across the package."""


class DimensionMismatch(ValueError):
    """Operands live on different grids, masks, or coefficient layouts."""


class ConfigurationError(ValueError):
    """A solver or CLI configuration violates a documented precondition."""


class FileFormatError(ValueError):
    """An instance or report file failed to parse."""

    def __init__(self, path, message, line=None):
        loc = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{loc}: {message}")
        self.path = path
        self.line = line


class NumericalFailure(RuntimeError):
    """An iteration produced non-finite values. Carries the partial trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class SingularStepError(NumericalFailure):
    """A steepest-descent step hit a numerically zero curvature term."""
