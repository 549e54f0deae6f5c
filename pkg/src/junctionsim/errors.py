"""Exception types raised across the package."""


class JunctionError(Exception):
    """Base class for all package errors."""


class CapacityError(JunctionError):
    """Requested Fock space exceeds the configured dimension cap."""


class StructuralError(JunctionError):
    """Operands live on different bases or have incompatible shapes."""


class ValidationError(JunctionError, ValueError):
    """Input violates a documented precondition."""


class IntegrationError(JunctionError):
    """Time integration could not reach the requested tolerance."""


class ModelInconsistencyError(JunctionError):
    """A Hamiltonian term breaks a conservation law it must respect."""


class SolverError(JunctionError):
    """Gap-equation solver failed to converge."""


class ImplementationDefectError(JunctionError):
    """Two independent computation routes disagree beyond round-off."""
