"""Risk-aware mission planning for unmanned ground vehicles.

Pipeline: terrain grid + mobility model -> cost graph; threat intelligence
-> per-cell risk surface -> additive log-risk; three commander modes over
the sealed graph, with local patch repair for mid-mission threat events.
"""

from .apulse import HeuristicMaps, SolverConfig, auto_bucket_width, precompute_heuristics, solve
from .errors import (
    ArgusError,
    InfeasibleBudgetError,
    NoPathError,
    ParseError,
    ResourceExhaustedError,
    ShapeError,
    ValidationError,
)
from .planner import (
    Balanced,
    FastWithinRisk,
    MissionRequest,
    PlanResult,
    SafeWithinTime,
    compute_kpis,
    plan,
    plan_balanced,
    plan_fast_within_risk,
    plan_safe_within_time,
)
from .replan import DynamicEvent, apply_event, compare_repair_vs_full, repair
from .risk import (
    DetectionParams,
    RiskField,
    ThreatSpec,
    build_risk_field,
    combine_threats,
    detection_probability,
    expected_detection,
    formation_dilate,
    log_cost,
    path_survival,
    risk_surface,
)
from .terrain import (
    CostGraph,
    MobilityModel,
    TerrainGrid,
    build_graph,
    derive_slope,
    edge_time,
    load_grid,
    load_mobility,
)

__version__ = "0.1.0"
