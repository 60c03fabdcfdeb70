"""confdyn: computable thermodynamic formalism for rational dynamics.

Conformal measures as transfer-operator eigenmeasures, pressure functions
and their first zero, Lyapunov exponents, induced expanding Markov maps
with integrable return times, finite generating partitions, and the
dimension identities tying them together - with exact circle/interval
models as benchmarks.
"""

from .errors import (
    AssignmentOverflow,
    BoundaryAmbiguity,
    BracketInvalid,
    BudgetExceeded,
    CombinatoricsMismatch,
    ConfdynError,
    CriticalOrbitHit,
    CriticalProximity,
    DegenerateEvaluation,
    DistortionBudgetExceeded,
    EmptyCell,
    ExceptionalSupportWarning,
    ExpansionUncertified,
    HypothesisFailed,
    InjectivityUncertifiable,
    MassDeficit,
    NoConvergence,
    ResolutionExceeded,
    RootFindingFailure,
)
from .sphere import (
    CriticalSet,
    RationalMapSpec,
    SpherePoint,
    critical_points,
    eval_map,
    preimages,
    spherical_derivative,
    spherical_distance,
)

__version__ = "0.1.0"
