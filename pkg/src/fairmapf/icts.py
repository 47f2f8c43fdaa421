"""Increasing-cost search over per-agent step counts with fairness gating.

The search walks the lattice of step vectors (one entry per agent, starting
at the per-agent optima) in IDA* fashion: a bound on the summed extra step
cost is exhausted completely before moving to the smallest exceeding cost.
Every step vector visited within the bound gets a per-agent time-expanded
DAG of all walks with exactly that many steps; the conflict-free members of
the DAG product whose welfare vector is envy-free flow into the accumulator.
The run stops after the first bound that leaves the accumulator nonempty,
then hands the accumulator to the fairness filter and keeps the
welfare-maximizing survivor.

All plans at one step vector share a welfare vector, so envy-freeness is
decided before any path enumeration and a node either contributes plans or
is skipped wholesale.
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .core import AgentType, GridGraph, JointPlan, Path
from .fairness import FairnessConfig, is_envy_free
from .mapio import InstanceSpec
from .plans import PlanSet
from .sassp import default_max_extra, step_lower_bounds
from .solver import (
    NO_FAIR_PLAN,
    SOLVED,
    TIMEOUT,
    Deadline,
    SolveLimits,
    SolveResult,
    SolveStats,
    SolveTimeout,
    select_final_plan,
)

BOUND_TOL = 1e-12

# below this product size the plain generator beats array setup costs
_VECTOR_MIN_PRODUCT = 20_000
_DEADLINE_STRIDE = 4096


@dataclass(frozen=True)
class SearchNode:
    """A step vector with its accumulated extra cost."""

    steps: tuple[int, ...]
    g: float
    h: float = 0.0

    @property
    def f(self) -> float:
        return self.g + self.h


class TimeExpandedDag:
    """Layered DAG of all exactly-s-step walks from start to goal.

    Nodes are (vertex, t); edges go to neighbors or the same vertex at t+1.
    After pruning, every node lies on some root-to-leaf walk and the only
    leaf is (goal, s). An empty DAG (no walk of length s exists) has no
    layers at all.
    """

    __slots__ = ("start", "goal", "depth", "layers", "succ")

    def __init__(self, start, goal, depth, layers, succ):
        self.start = start
        self.goal = goal
        self.depth = depth
        self.layers = layers
        self.succ = succ

    @property
    def is_empty(self) -> bool:
        return not self.layers

    def count_paths(self) -> int:
        if self.is_empty:
            return 0
        counts = {(self.goal, self.depth): 1}
        for t in range(self.depth - 1, -1, -1):
            for v in self.layers[t]:
                counts[(v, t)] = sum(counts[(u, t + 1)] for u in self.succ[(v, t)])
        return counts[(self.start, 0)]

    def iter_paths(self) -> Iterator[tuple[int, ...]]:
        """All root-to-leaf walks in lexicographic vertex order."""
        if self.is_empty:
            return
        stack = [self.start]

        def rec(v: int, t: int) -> Iterator[tuple[int, ...]]:
            if t == self.depth:
                yield tuple(stack)
                return
            for u in self.succ[(v, t)]:
                stack.append(u)
                yield from rec(u, t + 1)
                stack.pop()

        yield from rec(self.start, 0)


def build_dag(graph: GridGraph, agent: AgentType, s: int) -> TimeExpandedDag:
    """Time-expanded DAG of every s-step walk from the agent's start to goal."""
    start, goal = agent.start, agent.goal
    empty = TimeExpandedDag(start, goal, s, (), {})
    if not (graph.is_passable(start) and graph.is_passable(goal)):
        return empty

    forward = [{start}]
    for _ in range(s):
        nxt = set()
        for v in forward[-1]:
            nxt.add(v)
            nxt.update(graph.neighbors(v))
        forward.append(nxt)
    if goal not in forward[s]:
        return empty

    keep = [set() for _ in range(s + 1)]
    keep[s] = {goal}
    for t in range(s - 1, -1, -1):
        ahead = keep[t + 1]
        for v in forward[t]:
            if v in ahead or any(u in ahead for u in graph.neighbors(v)):
                keep[t].add(v)
    if start not in keep[0]:
        return empty

    succ = {}
    for t in range(s):
        ahead = keep[t + 1]
        for v in keep[t]:
            outs = [u for u in (v,) + graph.neighbors(v) if u in ahead]
            succ[(v, t)] = tuple(sorted(outs))
    layers = tuple(tuple(sorted(layer)) for layer in keep)
    return TimeExpandedDag(start, goal, s, layers, succ)


def _stream_joint(
    dags: Sequence[TimeExpandedDag], deadline: Deadline | None
) -> Iterator[list[list[int]]]:
    """Conflict-free walk combinations in lexicographic per-agent order.

    Yields the internal chosen-walk buffers; callers must copy before the
    next advance. Agents are fixed one at a time, and a walk is pruned as
    soon as it collides with any already-fixed agent: shared vertex at the
    same timestamp, or an exchange of adjacent cells across one step.
    """
    n = len(dags)
    if any(d.is_empty for d in dags):
        return
    depths = [d.depth for d in dags]
    # recursion tracks one generator frame per timestep per agent
    need = 3 * (sum(depths) + 2 * n) + 200
    if sys.getrecursionlimit() < need:
        sys.setrecursionlimit(need)
    vert_occ: set[tuple[int, int]] = set()
    move_occ: set[tuple[int, int, int]] = set()
    chosen: list[list[int]] = [[] for _ in range(n)]
    ticks = 0

    def occupy(i: int) -> None:
        walk = chosen[i]
        for t, v in enumerate(walk):
            vert_occ.add((v, t))
        for t in range(1, len(walk)):
            if walk[t - 1] != walk[t]:
                move_occ.add((walk[t - 1], walk[t], t))

    def release(i: int) -> None:
        walk = chosen[i]
        for t, v in enumerate(walk):
            vert_occ.discard((v, t))
        for t in range(1, len(walk)):
            if walk[t - 1] != walk[t]:
                move_occ.discard((walk[t - 1], walk[t], t))

    def extend(i: int) -> Iterator[list[list[int]]]:
        nonlocal ticks
        if i == n:
            yield chosen
            return
        dag = dags[i]
        if (dag.start, 0) in vert_occ:
            return
        dead: set[tuple[int, int]] = set()
        walk = chosen[i]
        walk.clear()
        walk.append(dag.start)

        # returns True when agent i completed at least one walk from here;
        # dead states are those the agent cannot finish from, given the
        # already-fixed walks, so they are safe to memoize per prefix
        def advance(v: int, t: int) -> Iterator[list[list[int]]]:
            nonlocal ticks
            ticks += 1
            if deadline is not None and ticks % _DEADLINE_STRIDE == 0:
                deadline.check()
            if t == depths[i]:
                occupy(i)
                yield from extend(i + 1)
                release(i)
                return True
            completed = False
            nt = t + 1
            for u in dag.succ[(v, t)]:
                if (u, nt) in dead or (u, nt) in vert_occ:
                    continue
                if u != v and (u, v, nt) in move_occ:
                    continue
                walk.append(u)
                done = yield from advance(u, nt)
                completed = completed or done
                walk.pop()
            if not completed:
                dead.add((v, t))
            return completed

        agen = advance(dag.start, 0)
        yield from agen

    yield from extend(0)


def joint_product_paths(dags: Sequence[TimeExpandedDag]) -> Iterator[JointPlan]:
    """Every conflict-free combination of one walk per DAG."""
    for chosen in _stream_joint(dags, None):
        yield JointPlan(tuple(Path(tuple(w)) for w in chosen))


def _paths_array(dag: TimeExpandedDag, cap: int) -> tuple[np.ndarray, bool]:
    """First ``cap`` walks (lex order) as an int32 array, plus a truncation flag."""
    rows = list(itertools.islice(dag.iter_paths(), cap + 1))
    capped = len(rows) > cap
    if capped:
        rows = rows[:cap]
    return np.asarray(rows, dtype=np.int32), capped


def _enumerate_pair_vectorized(
    dag0: TimeExpandedDag,
    dag1: TimeExpandedDag,
    cap: int,
    retain: int,
    path_cap: int,
    deadline: Deadline | None,
) -> tuple[int, list[JointPlan], bool]:
    """Two-agent node enumeration through boolean conflict masks."""
    arr0, capped0 = _paths_array(dag0, path_cap)
    arr1, capped1 = _paths_array(dag1, path_cap)
    overlap = min(dag0.depth, dag1.depth)
    count = 0
    plans: list[JointPlan] = []
    cap_hit = capped0 or capped1
    chunk = max(1, (1 << 22) // max(1, arr1.shape[0]))
    for lo in range(0, arr0.shape[0], chunk):
        if deadline is not None:
            deadline.check()
        a = arr0[lo : lo + chunk]
        conf = np.zeros((a.shape[0], arr1.shape[0]), dtype=bool)
        for t in range(overlap + 1):
            conf |= a[:, t : t + 1] == arr1[None, :, t]
        for t in range(1, overlap + 1):
            conf |= (a[:, t : t + 1] == arr1[None, :, t - 1]) & (
                a[:, t - 1 : t] == arr1[None, :, t]
            )
        rows, cols = np.nonzero(~conf)
        take = len(rows)
        if count + take > cap:
            take = cap - count
            cap_hit = True
        for k in range(take):
            if len(plans) >= retain:
                break
            p0 = Path(tuple(int(x) for x in arr0[lo + rows[k]]))
            p1 = Path(tuple(int(x) for x in arr1[cols[k]]))
            plans.append(JointPlan((p0, p1)))
        count += take
        if count >= cap:
            break
    return count, plans, cap_hit


def _enumerate_node(
    dags: Sequence[TimeExpandedDag],
    cap: int,
    retain: int,
    path_cap: int,
    deadline: Deadline | None,
) -> tuple[int, list[JointPlan], bool]:
    """(number of conflict-free plans streamed, retained prefix, cap flag)."""
    if len(dags) == 2:
        product = dags[0].count_paths() * dags[1].count_paths()
        if product > _VECTOR_MIN_PRODUCT:
            return _enumerate_pair_vectorized(
                dags[0], dags[1], cap, retain, path_cap, deadline
            )
    count = 0
    plans: list[JointPlan] = []
    cap_hit = False
    for chosen in _stream_joint(dags, deadline):
        count += 1
        if len(plans) < retain:
            plans.append(JointPlan(tuple(Path(tuple(w)) for w in chosen)))
        if count >= cap:
            cap_hit = True
            break
    return count, plans, cap_hit


class FairIcts:
    """Driver object holding the instance, budgets and DAG cache."""

    def __init__(
        self,
        instance: InstanceSpec,
        limits: SolveLimits | None = None,
        fairness: FairnessConfig | None = None,
        heuristic=None,
    ):
        self.graph = instance.graph
        self.agents = instance.agents
        self.limits = limits or SolveLimits()
        self.fairness = fairness or FairnessConfig(epsilon=instance.epsilon)
        # admissible estimate of remaining extra cost; zero keeps bounds exact
        self.heuristic = heuristic or (lambda steps: 0.0)
        self.base_steps = step_lower_bounds(self.graph, self.agents)
        extra = self.limits.max_extra_steps
        if extra is None:
            extra = default_max_extra(self.graph)
        self.step_caps = tuple(
            min(s + extra, self.limits.max_steps) if self.limits.max_steps is not None else s + extra
            for s in self.base_steps
        )
        self._dag_cache: dict[tuple[int, int], TimeExpandedDag] = {}
        self.stats = SolveStats(algorithm="icts")
        self._deadline: Deadline | None = None

    def root(self) -> SearchNode:
        steps = self.base_steps
        return SearchNode(steps, 0.0, self.heuristic(steps))

    def _dag(self, agent_idx: int, s: int) -> TimeExpandedDag:
        key = (agent_idx, s)
        dag = self._dag_cache.get(key)
        if dag is None:
            dag = build_dag(self.graph, self.agents[agent_idx], s)
            self._dag_cache[key] = dag
        return dag

    def _node_welfare(self, steps: tuple[int, ...]) -> tuple[float, ...]:
        return tuple(
            a.utility - s * a.step_cost for a, s in zip(self.agents, steps)
        )

    def _process_node(self, steps: tuple[int, ...], accumulator: PlanSet, epsilon: float) -> None:
        self.stats.nodes_expanded += 1
        welfare = self._node_welfare(steps)
        if self.fairness.use_envy and not is_envy_free(welfare, epsilon):
            return
        dags = [self._dag(i, s) for i, s in enumerate(steps)]
        if any(d.is_empty for d in dags):
            return
        cap = self.limits.max_plans_per_node if self.limits.keep_candidates else 1
        retain = accumulator.retain_per_group or cap
        count, plans, cap_hit = _enumerate_node(
            dags, cap, retain, self.limits.max_paths_per_dag, self._deadline
        )
        if count:
            accumulator.add_group(welfare, plans, count)
            self.stats.plans_found += count
        if cap_hit and self.limits.keep_candidates:
            self.stats.cap_hits += 1

    def depth_bound_search(
        self,
        root: SearchNode,
        bound: float,
        accumulator: PlanSet,
        epsilon: float | None = None,
        processed: set[tuple[int, ...]] | None = None,
    ) -> tuple[bool, float]:
        """Visit every step vector with f within ``bound``.

        Returns (accumulator nonempty, smallest f seen beyond the bound;
        infinite when the capped lattice is exhausted). ``processed``
        carries enumerated vectors across successive bounds so a vector
        never feeds the accumulator twice.
        """
        if epsilon is None:
            epsilon = self.fairness.epsilon
        if processed is None:
            processed = set()
        min_exceeding = float("inf")
        visited: set[tuple[int, ...]] = set()
        stack: list[tuple[tuple[int, ...], float]] = [(root.steps, root.g)]
        while stack:
            steps, g = stack.pop()
            if self._deadline is not None:
                self._deadline.check()
            f = g + self.heuristic(steps)
            if f > bound + BOUND_TOL:
                if f < min_exceeding:
                    min_exceeding = f
                continue
            if steps in visited:
                continue
            visited.add(steps)
            if steps not in processed:
                processed.add(steps)
                self._process_node(steps, accumulator, epsilon)
            for i in range(len(steps) - 1, -1, -1):
                if steps[i] + 1 <= self.step_caps[i]:
                    child = steps[:i] + (steps[i] + 1,) + steps[i + 1 :]
                    stack.append((child, g + self.agents[i].step_cost))
        return bool(accumulator), min_exceeding

    def solve(self) -> SolveResult:
        limits = self.limits
        self._deadline = Deadline(limits.time_limit_s)
        accumulator = PlanSet(
            self.agents, retain_per_group=10_000 if limits.keep_candidates else 1
        )
        stats = self.stats
        root = self.root()
        status = NO_FAIR_PLAN

        if any(cap < base for cap, base in zip(self.step_caps, self.base_steps)):
            stats.horizon_exhausted = True
            stats.runtime_s = self._deadline.elapsed()
            return SolveResult(NO_FAIR_PLAN, None, None, None, stats,
                               accumulator if limits.keep_candidates else None, None)

        try:
            bound = root.f
            processed: set[tuple[int, ...]] = set()
            while True:
                stats.bounds.append(bound)
                found, min_exceeding = self.depth_bound_search(
                    root, bound, accumulator, processed=processed
                )
                if found and not limits.exhaustive_bounds:
                    break
                if min_exceeding == float("inf"):
                    stats.horizon_exhausted = not found
                    break
                if min_exceeding > limits.max_bound:
                    stats.horizon_exhausted = not found
                    break
                bound = min_exceeding
        except SolveTimeout:
            stats.runtime_s = self._deadline.elapsed()
            return SolveResult(TIMEOUT, None, None, None, stats,
                               accumulator if limits.keep_candidates else None, None)

        plan, welfares, sw, kept, clamps = select_final_plan(
            accumulator, self.agents, self.fairness
        )
        stats.clamp_events = clamps
        stats.candidate_groups = len(accumulator.groups())
        # g counts extra cost only; the full plan cost is base + bound
        base_cost = sum(
            s * a.step_cost for s, a in zip(self.base_steps, self.agents)
        )
        stats.extra["base_cost"] = base_cost
        stats.extra["final_bound"] = bound
        stats.extra["total_cost_bound"] = base_cost + bound
        stats.runtime_s = self._deadline.elapsed()
        if plan is not None:
            status = SOLVED
        return SolveResult(
            status,
            plan,
            welfares,
            sw,
            stats,
            accumulator if limits.keep_candidates else None,
            kept if limits.keep_candidates else None,
        )


def fair_icts_solve(
    instance: InstanceSpec,
    limits: SolveLimits | None = None,
    fairness: FairnessConfig | None = None,
) -> SolveResult:
    """Best fair plan by increasing-cost search; see module docstring."""
    return FairIcts(instance, limits, fairness).solve()
