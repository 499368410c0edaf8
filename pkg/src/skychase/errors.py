"""Exception types shared across the library.

Planning errors split into two families: hard input/configuration problems
(bad shapes, singular systems, malformed scenario files) and soft planning
outcomes (no feasible candidate survived filtering). Callers that drive the
closed loop catch the soft family and fall back; the hard family propagates.
"""


class SkychaseError(Exception):
    """Base class for all library-specific errors."""


class ZeroPolynomial(SkychaseError):
    """A polynomial normalized to identically zero where a nonzero one is required."""


class DegenerateChain(SkychaseError):
    """A Sturm remainder cascade lost all significant digits; the count is untrustworthy."""


class CheckInconclusive(SkychaseError):
    """A feasibility certificate could not be established either way.

    Raised when an underlying root count degenerates; feasibility callers
    treat the candidate as infeasible (conservative).
    """


class NonSPDShape(SkychaseError):
    """Obstacle shape matrix is not symmetric positive definite."""


class NonSPDCovariance(SkychaseError):
    """Observation covariance is not symmetric positive definite."""


class FactorizationFailure(SkychaseError):
    """A normal-equation matrix could not be factorized (numerically singular)."""


class SingularKKT(SkychaseError):
    """The stationarity system for constrained planning is singular or its
    rank condition (polynomial degree above the constrained derivative count)
    is violated."""


class NoFeasiblePrediction(SkychaseError):
    """Every candidate target prediction intersected an obstacle."""


class NoFeasibleCandidate(SkychaseError):
    """Every candidate chasing trajectory failed the feasibility certificate."""


class ScenarioInvalid(SkychaseError):
    """A scenario file failed schema or semantic validation."""
