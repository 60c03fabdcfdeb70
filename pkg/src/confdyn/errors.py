"""Exception and warning types shared across the package."""


class ConfdynError(Exception):
    """Base class for all computational failures in this package."""


class DegenerateEvaluation(ConfdynError):
    """Both homogeneous coordinates vanished; numerator and denominator
    likely share a common factor."""


class RootFindingFailure(ConfdynError):
    """Simultaneous root iteration did not reach the residual tolerance
    within its sweep budget."""

    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


class CriticalOrbitHit(ConfdynError):
    """An orbit hit a critical point to machine precision."""


class DistortionBudgetExceeded(ConfdynError):
    """Accumulated pullback distortion reached log 2; the requested ball
    was too large for this backward walk."""


class CriticalProximity(ConfdynError):
    """A pulled-back region could not be certified disjoint from the
    critical set."""


class EmptyCell(ConfdynError):
    """An active cell received no sample points during matrix assembly."""


class NoConvergence(ConfdynError):
    """Iteration budget exhausted before reaching tolerance."""

    def __init__(self, msg, last_residual=None):
        super().__init__(msg)
        self.last_residual = last_residual


class BracketInvalid(ConfdynError):
    """Root bracketing endpoints do not straddle zero."""


class InjectivityUncertifiable(ConfdynError):
    """A test cell is too large to certify injectivity of the map on it."""


class ExpansionUncertified(ConfdynError):
    """An induced branch failed the minimum-expansion certificate."""


class MassDeficit(ConfdynError):
    """Unassigned base mass exceeds the fullness tolerance."""

    def __init__(self, msg, deficit=None):
        super().__init__(msg)
        self.deficit = deficit


class AssignmentOverflow(ConfdynError):
    """Partition assignment would need more classes than the degree
    permits; the cylinder tree violates its invariants."""


class BoundaryAmbiguity(ConfdynError):
    """A point lies within tolerance of a partition-class boundary and
    cannot be coded."""


class CombinatoricsMismatch(ConfdynError):
    """Paired backward walks diverged to different inverse branches."""


class BudgetExceeded(ConfdynError):
    """A certified bound was crossed while accumulating a cocycle sum."""


class HypothesisFailed(ConfdynError):
    """A formula's hypothesis (e.g. the Pesin identity) does not hold
    within tolerance for the supplied data."""

    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


class ResolutionExceeded(ConfdynError):
    """Requested radii fall below the validity window of the measure's
    resolution."""


class ExceptionalSupportWarning(UserWarning):
    """Eigenmeasure mass concentrates on very few cells, which is the
    signature of an atomic (exceptional) conformal measure."""
