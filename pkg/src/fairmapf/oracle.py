"""Brute-force reference implementations for tiny instances.

Everything here is written from the definitions, sharing no search code
with the solvers, so solver outputs can be checked against an independent
computation. The only shared piece is the conflict scan, which is the
common ground truth both sides must agree on anyway.

Scope is guarded hard: up to 5x5 maps, 4 agents, 8 steps per agent.
Outside that envelope the walk product explodes and the oracle refuses to
run rather than silently taking hours.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import AgentType, GridGraph, JointPlan, Path, check_feasible
from .fairness import FairnessConfig
from .plans import PlanSet

MAX_ORACLE_AGENTS = 4
MAX_ORACLE_DIM = 5
MAX_ORACLE_STEPS = 8

_TOL = 1e-12
_SW_TOL = 1e-15


class OracleScopeError(ValueError):
    """Instance exceeds the envelope the brute-force oracle can afford."""


def _goal_distances(graph: GridGraph, goal: int) -> dict[int, int]:
    # plain queue flood, kept local so the oracle stands alone
    dist = {goal: 0}
    queue = deque([goal])
    while queue:
        v = queue.popleft()
        for u in graph.neighbors(v):
            if u not in dist:
                dist[u] = dist[v] + 1
                queue.append(u)
    return dist


def enumerate_walks(
    graph: GridGraph, start: int, goal: int, steps: int
) -> list[tuple[int, ...]]:
    """All walks of exactly ``steps`` moves from start to goal, lex order.

    A walk may wait in place; each entry is the full vertex sequence of
    length steps + 1.
    """
    dist = _goal_distances(graph, goal)
    if start not in dist or dist[start] > steps:
        return []
    out: list[tuple[int, ...]] = []
    walk = [start]

    def grow(v: int, remaining: int) -> None:
        if remaining == 0:
            if v == goal:
                out.append(tuple(walk))
            return
        for u in sorted((v,) + graph.neighbors(v)):
            if dist.get(u, remaining + 1) <= remaining - 1:
                walk.append(u)
                grow(u, remaining - 1)
                walk.pop()

    grow(start, steps)
    return out


def _check_scope(graph: GridGraph, agents: Sequence[AgentType], max_steps: int) -> None:
    if len(agents) > MAX_ORACLE_AGENTS:
        raise OracleScopeError(f"oracle handles at most {MAX_ORACLE_AGENTS} agents")
    if graph.width > MAX_ORACLE_DIM or graph.height > MAX_ORACLE_DIM:
        raise OracleScopeError(f"oracle handles maps up to {MAX_ORACLE_DIM}x{MAX_ORACLE_DIM}")
    if max_steps > MAX_ORACLE_STEPS:
        raise OracleScopeError(f"oracle handles at most {MAX_ORACLE_STEPS} steps per agent")


def estimate_product_size(
    graph: GridGraph, agents: Sequence[AgentType], max_steps: int
) -> int:
    """Joint combinations before conflict filtering; no scope guard."""
    total = 1
    for agent in agents:
        n = 0
        for s in range(max_steps + 1):
            n += len(enumerate_walks(graph, agent.start, agent.goal, s))
        total *= n
    return total


def enumerate_feasible(
    graph: GridGraph, agents: Sequence[AgentType], max_steps: int
) -> list[JointPlan]:
    """Every conflict-free joint plan with per-agent lengths up to max_steps."""
    _check_scope(graph, agents, max_steps)
    per_agent: list[list[Path]] = []
    for agent in agents:
        walks: list[Path] = []
        for s in range(max_steps + 1):
            walks.extend(
                Path(w) for w in enumerate_walks(graph, agent.start, agent.goal, s)
            )
        per_agent.append(walks)
    feasible = []
    for combo in itertools.product(*per_agent):
        plan = JointPlan(tuple(combo))
        if not check_feasible(plan):
            feasible.append(plan)
    return feasible


def _welfare(agents: Sequence[AgentType], plan: JointPlan) -> tuple[float, ...]:
    return tuple(
        a.utility - p.length * a.step_cost for a, p in zip(agents, plan.paths)
    )


def _envy_ok(w: tuple[float, ...], epsilon: float) -> bool:
    return (max(w) - min(w)) <= epsilon + _TOL


def _maxmin_ok(w: tuple[float, ...], others: Iterable[tuple[float, ...]]) -> bool:
    # agents considered poorest-first under this plan, ties by index
    order = sorted(range(len(w)), key=lambda i: (w[i], i))
    for other in others:
        for rank, i in enumerate(order):
            if other[i] > w[i] + _TOL and all(
                other[j] >= w[j] - _TOL for j in order[:rank]
            ):
                return False
    return True


def _prop_ok(
    w: tuple[float, ...], others: Iterable[tuple[float, ...]], floor: float
) -> bool:
    for other in others:
        total = 0.0
        for wi, oi in zip(w, other):
            total += (oi - wi) / max(wi, floor)
        if total > _TOL:
            return False
    return True


def _fair_indices(
    vectors: Sequence[tuple[float, ...]], config: FairnessConfig
) -> list[int]:
    kept = []
    for i, w in enumerate(vectors):
        if config.use_envy and not _envy_ok(w, config.epsilon):
            continue
        if config.use_maxmin and not _maxmin_ok(w, vectors):
            continue
        if config.use_proportional and not _prop_ok(w, vectors, config.welfare_floor):
            continue
        kept.append(i)
    return kept


def _argmax_sw(
    indices: Sequence[int], vectors: Sequence[tuple[float, ...]]
) -> int | None:
    best = None
    best_sw = float("-inf")
    for i in indices:
        sw = sum(vectors[i])
        if sw > best_sw + _SW_TOL:
            best = i
            best_sw = sw
    return best


@dataclass(frozen=True)
class OracleOptimum:
    """Full answer over the feasible universe of a tiny instance."""

    plan: JointPlan | None
    welfares: tuple[float, ...] | None
    social_welfare: float | None
    fair_plans: tuple[JointPlan, ...]
    feasible_count: int
    unfiltered_optimum: float | None


def oracle_fair_optimum(
    graph: GridGraph,
    agents: Sequence[AgentType],
    config: FairnessConfig,
    max_steps: int,
) -> OracleOptimum:
    """Exhaustive fair optimum over all conflict-free plans up to max_steps."""
    feasible = enumerate_feasible(graph, agents, max_steps)
    vectors = [_welfare(agents, p) for p in feasible]
    unfiltered = max((sum(w) for w in vectors), default=None)
    kept = _fair_indices(vectors, config)
    best = _argmax_sw(kept, vectors)
    if best is None:
        return OracleOptimum(None, None, None,
                             tuple(feasible[i] for i in kept), len(feasible), unfiltered)
    return OracleOptimum(
        feasible[best],
        vectors[best],
        sum(vectors[best]),
        tuple(feasible[i] for i in kept),
        len(feasible),
        unfiltered,
    )


def oracle_select(
    candidates: PlanSet | Sequence[JointPlan],
    agents: Sequence[AgentType],
    config: FairnessConfig,
) -> tuple[JointPlan | None, tuple[float, ...] | None, float | None]:
    """Fairness filter and welfare argmax over an explicit candidate set.

    Mirrors what a solver does with its accumulator, recomputed from the
    definitions, so the two can be compared plan for plan.
    """
    plans = list(candidates)
    vectors = [_welfare(agents, p) for p in plans]
    kept = _fair_indices(vectors, config)
    best = _argmax_sw(kept, vectors)
    if best is None:
        return None, None, None
    return plans[best], vectors[best], sum(vectors[best])
