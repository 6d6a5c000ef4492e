"""Exception types shared across the package."""


class UavHmmaError(Exception):
    """Base class for all package errors."""


class ConfigError(UavHmmaError):
    """Invalid or inconsistent configuration input.

    ``field`` names the offending entry so CLI diagnostics can point at it.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"config field '{field}': {message}")


class BadCardinality(UavHmmaError):
    """User count does not factor into the requested group layout."""


class InfeasiblePropulsion(UavHmmaError):
    """Propulsion power budget below the hover requirement."""


class Infeasible(UavHmmaError):
    """An optimization subproblem has an empty feasible region."""


class SolverFailure(UavHmmaError):
    """A solver terminated without a usable solution."""


class TrustRegionShrunk(UavHmmaError):
    """Trajectory trust region collapsed without finding an improving step."""
