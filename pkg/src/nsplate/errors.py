"""Exception types raised by the solver library.

Every error raised on purpose derives from :class:`NSPlateError` so callers
(and the command line driver) can map failures to exit categories.
"""


class NSPlateError(Exception):
    """Base class for all library errors."""


class ConfigError(NSPlateError):
    """Invalid solver or run configuration."""


class InvalidMeshError(NSPlateError):
    """Mesh construction parameters are unusable (e.g. too few subdivisions)."""


class MeshCompatibilityError(NSPlateError):
    """Fluid and plate discretizations cannot be combined."""


class CapabilityError(NSPlateError):
    """A quadrature degree or diagnostic size beyond the supported range."""


class NumericInputError(NSPlateError):
    """Non-finite data fed into assembly."""


class CouplingError(NSPlateError):
    """Interface data structure could not be built."""


class ConstraintConflictError(NSPlateError):
    """Two Dirichlet constraints disagree on the same degree of freedom."""


class SolverFailureError(NSPlateError):
    """A linear solve failed or produced non-finite values."""

    def __init__(self, message, level=None, iteration=None):
        super().__init__(message)
        self.level = level
        self.iteration = iteration


class NonconvergenceError(NSPlateError):
    """Picard iteration diverged or a non-converged state was used."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []
