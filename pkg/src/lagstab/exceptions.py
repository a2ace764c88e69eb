"""Exception types raised by the library."""


class InvalidArgument(ValueError):
    """An argument is outside the documented domain of an operation."""


class UnsupportedConfiguration(ValueError):
    """A combination of spaces or meshes that the assemblers do not handle."""


class DegenerateCut(ValueError):
    """The interface passes (numerically) through mesh vertices."""


class SingularSystem(RuntimeError):
    """The factorisation met a pivot below the singularity threshold.

    Carries the pivot ratio so that parameter sweeps can report it.
    """

    def __init__(self, message, pivot_ratio=0.0):
        super().__init__(message)
        self.pivot_ratio = pivot_ratio


class NumericalFailure(RuntimeError):
    """A solve finished but did not reach the residual tolerance."""
