"""Exception hierarchy shared by all modules."""


class InvfemError(Exception):
    """Base class for every error raised by the package."""


class InvalidParameterError(InvfemError, ValueError):
    pass


class InvalidConfigurationError(InvfemError, ValueError):
    pass


class DomainError(InvfemError, ValueError):
    """A point lies outside the domain of a map (e.g. the origin for the inversion)."""


class GeometryError(InvfemError):
    """Point location failed."""


class ResourceError(InvfemError):
    pass


class MeshGenerationError(InvfemError):
    def __init__(self, message, tet=None):
        super().__init__(message)
        self.tet = tet


class AssemblyError(InvfemError):
    pass


class ConvergenceError(InvfemError):
    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class NumericalBreakdownError(InvfemError):
    pass


class UnsupportedForCaseError(InvfemError):
    pass


class InsufficientDataError(InvfemError, ValueError):
    pass


class EnergyBoundError(InvfemError):
    """The discrete energy exceeds the exact one by more than the allowed slack."""


class ToleranceNotMetError(InvfemError):
    def __init__(self, message, estimate=None, error_estimate=None):
        super().__init__(message)
        self.estimate = estimate
        self.error_estimate = error_estimate
