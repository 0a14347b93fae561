"""Welfare-optimal information sharing for an unobservable service queue.

Public API is re-exported from the submodules; see the README for a tour.
"""

from .model import (
    AbandonmentSpec,
    ArrivalRates,
    LinearUtility,
    ModelSpec,
    MultiTypeSpec,
    TabulatedUtility,
    full_info_threshold,
    linear_spec,
    u_eval,
    validate_utility,
)
from .steady_state import (
    NotAdmissible,
    NotNormalizable,
    SignalingMechanism,
    SteadyState,
    Threshold,
    mechanism_distribution,
    mechanism_from_distribution,
    threshold_distribution,
    threshold_mechanism,
)
from .measures import (
    ObedienceReport,
    ThresholdMeasures,
    WelfarePoint,
    join_value,
    leave_value,
    obedience_check,
    threshold_measures,
    weighted_welfare,
    welfare_h,
    welfare_point,
)
from .benchmarks import (
    FullInfoOutcome,
    NoInfoEquilibrium,
    critical_rate_high,
    critical_rate_low,
    critical_rate_low_lower_bound,
    full_info_dominated,
    full_info_outcome,
    no_info_distribution,
    no_info_dominated,
    no_info_equilibrium,
)
from .frontier import (
    CoincidenceWeight,
    FrontierResult,
    FrontierRow,
    InternalInconsistency,
    SignalingOptimum,
    admission_representative,
    frontier_sweep,
    leave_root,
    optimal_admission,
    optimal_signaling,
    theta_star,
)
from .lp import (
    AbandonmentReport,
    LinearProgram,
    LpSolution,
    MaxIterationsError,
    MultiTypeReport,
    base_lp,
    default_n_states,
    extract_distribution,
    multitype_truncation,
    simplex_solve,
    solve_abandonment,
    solve_base,
    solve_multitype,
)
from .sim import (
    SimConfig,
    SimReport,
    available_backends,
    empirical_obedience,
    run_simulation,
)

__version__ = "0.1.0"
