"""Exception types shared across the solver."""


class SolverError(Exception):
    """Base class for numerical failures."""


class NonConvergence(SolverError):
    """An iterative solve hit its iteration cap before reaching tolerance."""

    def __init__(self, what, stats=None):
        msg = what
        if stats is not None:
            msg = (f"{what}: no convergence after {stats.iterations} iterations "
                   f"(residual {stats.final_residual:.3e})")
        super().__init__(msg)
        self.stats = stats


class Breakdown(SolverError):
    """The BiCGStab recurrence stagnated (near-zero inner product)."""


class IncompatibleRhs(SolverError):
    """Right-hand side has a nonzero mean, outside the range of the Neumann operator."""


class MaxPrincipleViolation(SolverError):
    """Transported density left its admissible bounds; signals a discretization bug."""


class InvalidInitialDensity(ValueError):
    """Initial density violates the configured bounds."""


class HypothesisViolation(ValueError):
    """A diagnostic was requested for a run whose parameters violate its admissibility inequalities."""


class ValidationError(ValueError):
    """A configuration value violates a named admissibility inequality."""


class ParseError(ValueError):
    """Malformed configuration text."""

    def __init__(self, location, message):
        super().__init__(f"{location}: {message}")
        self.location = location
        self.message = message


class FixedPointStall(RuntimeWarning):
    """Fixed-point iteration hit its cap; the run continues with a flag in the report."""


class IoError(OSError):
    """Snapshot or time-series output could not be written."""
