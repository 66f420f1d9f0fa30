"""Exception types shared across the package."""


class ConvergenceError(RuntimeError):
    """An iterative scheme failed to reach its tolerance within its cap."""


class DataFormatError(ValueError):
    """An input file could not be parsed; message carries line diagnostics."""
