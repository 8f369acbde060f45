"""Exception hierarchy shared by every mtreg module."""


class MtregError(Exception):
    """Base class for all errors raised by mtreg."""


class DomainError(MtregError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConstructionError(MtregError, ValueError):
    """An object could not be built from the given parts."""


class UnsupportedSamplingError(MtregError):
    """The observable has no way to draw measured values."""


class PathError(MtregError, ValueError):
    """No tree path exists between the requested nodes."""


class StructureError(MtregError, ValueError):
    """A causal system or tree is malformed."""


class NoMaximizerError(MtregError):
    """The likelihood vanishes at every start point."""


class InsufficientDataError(MtregError, ValueError):
    """Too few observations for the requested fit."""


class SingularDesignError(MtregError, ValueError):
    """The design matrix does not have full column rank.

    ``column`` is the index into the augmented matrix (0 is the intercept)
    of the first column found to be linearly dependent on its predecessors.
    """

    def __init__(self, message: str, column: int | None = None):
        super().__init__(message)
        self.column = column
