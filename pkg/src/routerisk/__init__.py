"""Route-risk scoring for dynamic multi-agent execution graphs."""

from .cascade import (
    CascadeConfig,
    CascadeStats,
    criticality_report,
    generate_expansion_tree,
    simulate_cascade,
)
from .config import RunConfig
from .euclidean import (
    EuclideanConfig,
    PropagationState,
    init_state,
    propagate_step,
    route_score_euclidean,
)
from .evaluate import EvaluationResult, build_gate_examples, evaluate, sign_test_vs
from .gate import (
    FEATURE_NAMES,
    GateExample,
    GateModel,
    TrainingConfig,
    blend,
    extract_features,
    gate_diagnostics,
    gate_forward,
    train_gate,
)
from .graph import (
    DeltaEstimate,
    EmptyGraphError,
    FailureEvent,
    GraphSnapshot,
    InvalidRouteError,
    Route,
    RouteScore,
    ShellProfile,
    bfs_shells,
    cycle_rank_norm,
    gromov_delta,
    reciprocal_ratio,
    route_subgraph,
    shell_growth_slope,
    triangle_density,
)
from .hyperbolic import (
    EmbeddingCache,
    HyperbolicConfig,
    HyperbolicEmbedding,
    embed,
    fit_curvature,
    geodesic_distance,
    golden_section_minimize,
    route_score_hyperbolic,
)
from .scenarios import (
    Scenario,
    enumerate_route_pairs,
    generate_family_scenarios,
    generate_regime_scenarios,
    inject_attack,
    pair_routes,
)
from .scorers import (
    BlendedScorer,
    EuclideanScorer,
    HandSwitchingScorer,
    HyperbolicScorer,
    NativeScorer,
    StructuralBaselineScorer,
    build_scorers,
    hand_switching_score,
    native_score,
    structural_baseline_score,
)
from .stats import bootstrap_ci, correlations, exact_sign_test, rank_auc
from .temporal import (
    IntensityConfig,
    NodeIntensity,
    base_intensity,
    burst_statistic,
    damped_intensity,
    damped_intensity_map,
)

__version__ = "0.1.0"
