"""Exception types raised by the solvers and integrators."""


class PtFanoError(Exception):
    """Base class for all package errors."""


class OutsideBand(PtFanoError, ValueError):
    """Frequency lies outside the propagating band |omega| < 2C."""


class InsideBand(PtFanoError, ValueError):
    """Frequency lies inside the band where no pinned mode can exist."""


class DegenerateEquation(PtFanoError, ValueError):
    """The intensity equation carries no constraint (linear dimer off its eigenfrequency)."""


class NotLinear(PtFanoError, ValueError):
    """A linear-only routine received nonzero nonlinear coefficients."""


class NoConvergence(PtFanoError, RuntimeError):
    """No Newton start converged.

    ``diagnostics`` holds per-start final residual norms.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics if diagnostics is not None else {}


class Blowup(PtFanoError, RuntimeError):
    """Time integration exceeded the amplitude cap."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class NotSteady(UserWarning):
    """A time-domain transmissivity estimate fluctuated too much over its window."""
