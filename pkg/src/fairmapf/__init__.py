"""Fairness-constrained multi-agent path finding on grid maps.

Two complete solvers (increasing-cost search and constraint-tree search)
over a shared fairness layer, a bid-based payment mechanism, a brute-force
reference oracle, and a benchmark harness with figure output.
"""

from .core import (
    AgentType,
    Conflict,
    ContractError,
    GridGraph,
    JointPlan,
    Path,
    UnreachableGoalError,
    check_feasible,
    iter_conflicts,
    social_welfare,
    welfare,
    welfare_vector,
)
from .fairness import (
    FairnessConfig,
    filter_fair,
    is_envy_free,
    is_max_min_fair,
    is_proportionally_fair,
)
from .mapio import (
    GenerationError,
    InstanceSpec,
    MapFormatError,
    ScenarioEntry,
    load_map,
    load_scen,
    make_instance,
    parse_map,
    parse_scen,
    sample_agents,
    serialize_map,
)
from .plans import PlanGroup, PlanSet
from .sassp import (
    SpaceTimeConstraint,
    constrained_shortest_path,
    distance_field,
    shortest_steps,
)
from .icts import FairIcts, TimeExpandedDag, build_dag, fair_icts_solve, joint_product_paths
from .cbs import FairCbs, fair_cbs_solve, find_conflict
from .solver import (
    NO_FAIR_PLAN,
    SOLVED,
    TIMEOUT,
    TRUNCATED,
    SolveLimits,
    SolveResult,
    SolveStats,
)
from .mechanism import (
    CertReport,
    MechanismOutcome,
    allocate,
    certify_truthfulness,
    critical_value,
    run_mechanism,
    winning_set,
)
from .oracle import (
    OracleOptimum,
    OracleScopeError,
    enumerate_feasible,
    enumerate_walks,
    oracle_fair_optimum,
    oracle_select,
)
from .bench import BenchConfig, BenchRecord, run_benchmark, summarize

__version__ = "0.1.0"

__all__ = [
    "AgentType", "Conflict", "ContractError", "GridGraph", "JointPlan", "Path",
    "UnreachableGoalError", "check_feasible", "iter_conflicts", "social_welfare",
    "welfare", "welfare_vector",
    "FairnessConfig", "filter_fair", "is_envy_free", "is_max_min_fair",
    "is_proportionally_fair",
    "GenerationError", "InstanceSpec", "MapFormatError", "ScenarioEntry",
    "load_map", "load_scen", "make_instance", "parse_map", "parse_scen",
    "sample_agents", "serialize_map",
    "PlanGroup", "PlanSet",
    "SpaceTimeConstraint", "constrained_shortest_path", "distance_field",
    "shortest_steps",
    "FairIcts", "TimeExpandedDag", "build_dag", "fair_icts_solve",
    "joint_product_paths",
    "FairCbs", "fair_cbs_solve", "find_conflict",
    "NO_FAIR_PLAN", "SOLVED", "TIMEOUT", "TRUNCATED",
    "SolveLimits", "SolveResult", "SolveStats",
    "CertReport", "MechanismOutcome", "allocate", "certify_truthfulness",
    "critical_value", "run_mechanism", "winning_set",
    "OracleOptimum", "OracleScopeError", "enumerate_feasible", "enumerate_walks",
    "oracle_fair_optimum", "oracle_select",
    "BenchConfig", "BenchRecord", "run_benchmark", "summarize",
]
