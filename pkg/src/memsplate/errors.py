"""Exception types raised across the package."""


class MemsPlateError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(MemsPlateError):
    """Invalid, missing, or unknown configuration data."""


class NonConstantPermittivity(MemsPlateError):
    """Builtin boundary family requested with a spatially varying layer permittivity."""


class UnboundedGrowth(MemsPlateError):
    """Grid maximization of a growth constant keeps increasing under refinement."""


class AssumptionViolated(MemsPlateError):
    """A structural assumption on the boundary data family fails beyond tolerance."""


class SingularAssembly(MemsPlateError):
    """Element size underflowed; assembly would be singular."""


class LinearSolveFailed(MemsPlateError):
    """Linear solver did not reach the requested residual within its iteration cap."""


class DegenerateGap(MemsPlateError):
    """A column marked non-contact has a gap below the masking threshold (internal inconsistency)."""


class MissingTrace(MemsPlateError):
    """Potential field lacks the trace required by a node's force branch."""


class NonCanonicalFamily(MemsPlateError):
    """Closed-form evaluation requested for a family that is not the builtin one."""


class InfeasiblePerturbation(MemsPlateError):
    """A perturbed state leaves the admissible set (or loses its strict gap)."""


class StalledDescent(MemsPlateError):
    """Backtracking hit its floor before the stationarity tolerance was met.

    Carries the last iterate and its report so callers can inspect/record it.
    """

    def __init__(self, message, state=None, report=None):
        super().__init__(message)
        self.state = state
        self.report = report


class MaxIterations(MemsPlateError):
    """Outer iteration cap reached before convergence."""

    def __init__(self, message, state=None, report=None):
        super().__init__(message)
        self.state = state
        self.report = report


class BoundViolated(MemsPlateError):
    """A computed state exceeds its certified a-priori bound."""


class InvalidInterval(MemsPlateError):
    """Interval endpoints are out of range or in the wrong order."""


class IncompatibleState(MemsPlateError):
    """Persisted state does not match the configuration it is checked against."""
