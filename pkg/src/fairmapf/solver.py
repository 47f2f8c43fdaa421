"""Shared solver plumbing: limits, results, and final plan selection."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

from .core import AgentType, JointPlan
from .fairness import FairnessConfig, filter_fair
from .plans import PlanSet

SOLVED = "solved"
NO_FAIR_PLAN = "no-fair-plan"
TIMEOUT = "timeout"
TRUNCATED = "truncated"


class SolveTimeout(Exception):
    """Raised internally when the wall-clock budget runs out."""


class Deadline:
    """Cooperative wall-clock budget checked at search boundaries."""

    def __init__(self, seconds: float | None):
        self.seconds = seconds
        self._t0 = time.perf_counter()
        self._limit = None if seconds is None else self._t0 + seconds

    def check(self) -> None:
        if self._limit is not None and time.perf_counter() > self._limit:
            raise SolveTimeout()

    def elapsed(self) -> float:
        return time.perf_counter() - self._t0


@dataclass(frozen=True)
class SolveLimits:
    """Resource budgets shared by both solvers.

    ``max_steps`` caps every agent's path length outright; ``max_extra_steps``
    caps it relative to the agent's unconstrained optimum (default
    2*(width+height)). ``max_plans_per_node`` bounds how many joint plans one
    search node may stream into the accumulator; ``max_nodes`` bounds
    constraint-tree expansion. With ``keep_candidates`` off the accumulator
    stores one witness per node, which leaves the final selection unchanged
    but keeps memory flat on large open maps.
    """

    time_limit_s: float | None = 60.0
    max_bound: float = float("inf")
    max_steps: int | None = None
    max_extra_steps: int | None = None
    max_plans_per_node: int = 1_000_000
    max_paths_per_dag: int = 100_000
    max_nodes: int = 100_000
    keep_candidates: bool = True
    exhaustive_bounds: bool = False


@dataclass
class SolveStats:
    algorithm: str
    runtime_s: float = 0.0
    nodes_expanded: int = 0
    plans_found: int = 0
    candidate_groups: int = 0
    clamp_events: int = 0
    cap_hits: int = 0
    horizon_exhausted: bool = False
    bounds: list[float] = field(default_factory=list)
    extra: dict = field(default_factory=dict)


@dataclass
class SolveResult:
    status: str
    plan: JointPlan | None
    welfares: tuple[float, ...] | None
    social_welfare: float | None
    stats: SolveStats
    candidates: PlanSet | None = None
    fair_plans: PlanSet | None = None

    @property
    def solved(self) -> bool:
        return self.status == SOLVED


def select_final_plan(
    accumulator: PlanSet,
    agents: Sequence[AgentType],
    config: FairnessConfig,
) -> tuple[JointPlan | None, tuple[float, ...] | None, float | None, PlanSet, int]:
    """Filter the accumulator and pick the welfare-maximizing survivor.

    Ties on social welfare keep the earliest accumulated plan. Returns
    (plan, welfares, social welfare, filtered set, clamp events); the plan is
    None when filtering leaves nothing.
    """
    outcome = filter_fair(accumulator, agents, config)
    best_group = None
    best_sw = None
    for group in outcome.kept.groups():
        sw = sum(group.welfare)
        if best_sw is None or sw > best_sw + 1e-15:
            best_sw = sw
            best_group = group
    if best_group is None:
        return None, None, None, outcome.kept, outcome.clamp_events
    return best_group.first(), best_group.welfare, best_sw, outcome.kept, outcome.clamp_events
