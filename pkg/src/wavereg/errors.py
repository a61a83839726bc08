"""Exception types shared across the package."""


class WaveregError(Exception):
    """Base class for all package errors."""


class ConfigError(WaveregError, ValueError):
    """Invalid grid, run configuration or command-line input."""


class InvariantError(WaveregError, RuntimeError):
    """An internal numerical invariant was violated (e.g. parity mismatch)."""


class BlowUpError(WaveregError, FloatingPointError):
    """Non-finite values appeared during time stepping."""

    def __init__(self, time, message=None):
        self.time = float(time)
        super().__init__(message or f"non-finite solution at t = {self.time:.6g}")


class InvertibilityError(WaveregError, ValueError):
    """The traveling-wave linear operator is singular for the requested speed."""


class ConvergenceError(WaveregError, RuntimeError):
    """Petviashvili iteration did not reach the requested tolerance."""

    def __init__(self, message, last_increment, iterations):
        self.last_increment = float(last_increment)
        self.iterations = int(iterations)
        super().__init__(message)


class DegenerateIterateError(ConvergenceError):
    """The stabilization factor denominator vanished."""
