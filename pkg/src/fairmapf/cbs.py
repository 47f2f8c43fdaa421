"""Constraint-tree search that collects envy-free conflict-free plans.

Classic two-level scheme: the high level maintains a tree of constraint
sets, ordered by summed path cost, and branches on the first conflict of
each node's joint plan; the low level replans single agents under
space-time constraints. Instead of stopping at the first conflict-free
node, the tree is expanded exhaustively (bounded by the replanning horizon
and duplicate constraint-set detection) and every conflict-free node whose
welfare vector is envy-free joins the accumulator. The fairness filter then
picks the final plan, exactly as in the increasing-cost search.

A node's children constrain the destination cell of one conflicting agent
at the conflict timestamp, for both conflict kinds: for an exchange the
timestamp is the arrival step, so the constrained agent may no longer
complete that traversal.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .core import (
    Conflict,
    JointPlan,
    iter_conflicts,
    welfare_vector,
)
from .fairness import FairnessConfig, is_envy_free
from .mapio import InstanceSpec
from .plans import PlanSet
from .sassp import SpaceTimeConstraint, constrained_shortest_path
from .solver import (
    NO_FAIR_PLAN,
    SOLVED,
    TIMEOUT,
    TRUNCATED,
    Deadline,
    SolveLimits,
    SolveResult,
    SolveStats,
    SolveTimeout,
    select_final_plan,
)


def find_conflict(plan: JointPlan) -> Conflict | None:
    """Earliest conflict of the joint plan, or None when conflict-free."""
    return next(iter_conflicts(plan), None)


@dataclass(order=False)
class CbsNode:
    constraints: frozenset[SpaceTimeConstraint]
    plan: JointPlan
    cost: float
    conflict: Conflict | None = field(default=None, compare=False)


class FairCbs:
    """Driver for the constraint-tree search over one instance."""

    def __init__(
        self,
        instance: InstanceSpec,
        limits: SolveLimits | None = None,
        fairness: FairnessConfig | None = None,
    ):
        self.graph = instance.graph
        self.agents = instance.agents
        self.limits = limits or SolveLimits()
        self.fairness = fairness or FairnessConfig(epsilon=instance.epsilon)
        self.stats = SolveStats(algorithm="cbs")

    def _replan(self, agent_idx: int, constraints: frozenset[SpaceTimeConstraint]):
        agent = self.agents[agent_idx]
        own = [c for c in constraints if c.agent == agent_idx]
        return constrained_shortest_path(
            self.graph,
            agent,
            own,
            max_extra=self.limits.max_extra_steps,
            max_steps=self.limits.max_steps,
        )

    def _cost(self, plan: JointPlan) -> float:
        return sum(
            p.length * a.step_cost for p, a in zip(plan.paths, self.agents)
        )

    def _root(self) -> CbsNode | None:
        paths = []
        for i in range(len(self.agents)):
            path = self._replan(i, frozenset())
            if path is None:
                return None
            paths.append(path)
        plan = JointPlan(tuple(paths))
        return CbsNode(frozenset(), plan, self._cost(plan), find_conflict(plan))

    def solve(self) -> SolveResult:
        limits = self.limits
        deadline = Deadline(limits.time_limit_s)
        stats = self.stats
        epsilon = self.fairness.epsilon
        accumulator = PlanSet(
            self.agents,
            retain_per_group=10_000 if limits.keep_candidates else 1,
            dedup=True,
        )

        def finish(status):
            stats.runtime_s = deadline.elapsed()
            stats.candidate_groups = len(accumulator.groups())
            candidates = accumulator if limits.keep_candidates else None
            if status is not None:
                # incomplete tree: the accumulator is only a partial
                # candidate set, so no plan is reported
                return SolveResult(status, None, None, None, stats, candidates, None)
            plan, welfares, sw, kept, clamps = select_final_plan(
                accumulator, self.agents, self.fairness
            )
            stats.clamp_events = clamps
            final = SOLVED if plan is not None else NO_FAIR_PLAN
            return SolveResult(
                final, plan, welfares, sw, stats, candidates,
                kept if limits.keep_candidates else None,
            )

        root = self._root()
        if root is None:
            stats.horizon_exhausted = True
            return finish(None)

        counter = 0
        heap: list[tuple[float, int, CbsNode]] = [(root.cost, counter, root)]
        seen: set[frozenset[SpaceTimeConstraint]] = {root.constraints}
        try:
            while heap:
                deadline.check()
                if stats.nodes_expanded >= limits.max_nodes:
                    return finish(TRUNCATED)
                _, _, node = heapq.heappop(heap)
                stats.nodes_expanded += 1
                conflict = node.conflict
                if conflict is None:
                    w = welfare_vector(self.agents, node.plan)
                    if not self.fairness.use_envy or is_envy_free(w, epsilon):
                        if accumulator.add(node.plan, welfare=w):
                            stats.plans_found += 1
                    continue
                branches = (
                    (conflict.agent_i, conflict.vertex_i),
                    (conflict.agent_j, conflict.vertex_j),
                )
                for agent_idx, vertex in branches:
                    forbid = SpaceTimeConstraint(agent_idx, vertex, conflict.time)
                    child_constraints = node.constraints | {forbid}
                    if child_constraints in seen:
                        continue
                    seen.add(child_constraints)
                    path = self._replan(agent_idx, child_constraints)
                    if path is None:
                        continue
                    paths = list(node.plan.paths)
                    paths[agent_idx] = path
                    plan = JointPlan(tuple(paths))
                    child = CbsNode(
                        child_constraints, plan, self._cost(plan), find_conflict(plan)
                    )
                    counter += 1
                    heapq.heappush(heap, (child.cost, counter, child))
        except SolveTimeout:
            return finish(TIMEOUT)
        return finish(None)


def fair_cbs_solve(
    instance: InstanceSpec,
    limits: SolveLimits | None = None,
    fairness: FairnessConfig | None = None,
) -> SolveResult:
    """Best fair plan by exhaustive constraint-tree search."""
    return FairCbs(instance, limits, fairness).solve()
