"""Sample-and-check planning for aerial pursuit among moving ellipsoidal obstacles.

The package is organized around one pipeline, run once per replanning cycle:

1. ``prediction`` fits a batch of candidate target trajectories to recent
   observations in closed form, discards candidates whose clearance
   polynomials admit a root inside the horizon, and keeps the cheapest
   survivor.
2. ``chasing`` turns that prediction into a batch of chaser primitives via
   a shared KKT factorization, certifies safety and view occlusion with
   Sturm sequences on exact clearance polynomials, and scores the
   survivors.
3. ``simulation`` closes the loop: a receding-horizon supervisor that
   senses, replans on triggers, and falls back to a braking primitive when
   no candidate certifies.

``polynomial`` and ``world`` supply the shared primitives (exact real-root
counting, trajectory containers, quadratic-form coefficient algebra), and
``scenario_io`` reads and writes the JSON scenario format consumed by the
``skychase`` command line tool.
"""

from .errors import (
    CheckInconclusive,
    DegenerateChain,
    FactorizationFailure,
    NoFeasibleCandidate,
    NoFeasiblePrediction,
    NonSPDCovariance,
    NonSPDShape,
    ScenarioInvalid,
    SingularKKT,
    SkychaseError,
    ZeroPolynomial,
)
from .polynomial import (
    Polynomial,
    count_distinct_real_roots,
    count_real_roots_batch,
    gram_matrix,
    sturm_chain,
)
from .world import (
    EllipsoidObstacle,
    TargetObservation,
    Trajectory3,
    fit_trajectory,
    pairwise_form_poly,
)
from .prediction import (
    PredictionCandidate,
    PredictorConfig,
    predict,
    prediction_cost,
    prediction_feasible,
)
from .chasing import (
    ChasePlan,
    ChaserConfig,
    CostBreakdown,
    InitialState,
    chasing_cost,
    chasing_feasible,
    clearance_forms,
    exact_clearance,
    exact_clearance_profile,
    plan,
    sample_view_skeletons,
    segment_clearance,
)
from .simulation import (
    ReplanRecord,
    Scenario,
    SimEvent,
    SimMetrics,
    SimReport,
    Timeline,
    compute_metrics,
    run,
)
from .scenario_io import (
    load_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
)

__version__ = "0.1.0"

__all__ = [
    "SkychaseError",
    "ZeroPolynomial",
    "DegenerateChain",
    "CheckInconclusive",
    "NonSPDShape",
    "NonSPDCovariance",
    "FactorizationFailure",
    "SingularKKT",
    "NoFeasiblePrediction",
    "NoFeasibleCandidate",
    "ScenarioInvalid",
    "Polynomial",
    "gram_matrix",
    "sturm_chain",
    "count_distinct_real_roots",
    "count_real_roots_batch",
    "Trajectory3",
    "EllipsoidObstacle",
    "TargetObservation",
    "fit_trajectory",
    "pairwise_form_poly",
    "PredictorConfig",
    "PredictionCandidate",
    "predict",
    "prediction_feasible",
    "prediction_cost",
    "ChaserConfig",
    "InitialState",
    "ChasePlan",
    "CostBreakdown",
    "plan",
    "chasing_feasible",
    "chasing_cost",
    "clearance_forms",
    "exact_clearance",
    "exact_clearance_profile",
    "segment_clearance",
    "sample_view_skeletons",
    "Scenario",
    "Timeline",
    "SimEvent",
    "ReplanRecord",
    "SimMetrics",
    "SimReport",
    "run",
    "compute_metrics",
    "load_scenario",
    "save_scenario",
    "scenario_from_dict",
    "scenario_to_dict",
    "__version__",
]
